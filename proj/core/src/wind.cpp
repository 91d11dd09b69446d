#include "afmdp/wind.hpp"

#include <algorithm>
#include <cmath>

#include "afmdp/errors.hpp"

namespace afmdp {

namespace {

enum Dim : std::size_t { kPrice = 0, kMismatch = 1, kSoc = 2, kAction = 3 };

std::vector<double> cumulative_rows(const DenseMatrix& m) {
    std::vector<double> cum(m.rows() * m.cols());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double acc = 0.0;
        std::size_t last = 0;
        for (std::size_t c = 0; c < m.cols(); ++c) {
            acc += m(r, c);
            cum[r * m.cols() + c] = acc;
            if (m(r, c) > 0.0) last = c;
        }
        for (std::size_t c = last; c < m.cols(); ++c) cum[r * m.cols() + c] = 2.0;
    }
    return cum;
}

std::size_t draw(const std::vector<double>& cum, std::size_t cols, std::size_t row, double u) {
    const double* begin = cum.data() + row * cols;
    return static_cast<std::size_t>(std::upper_bound(begin, begin + cols, u) - begin);
}

void check_chain(const DenseMatrix& m, std::size_t bins, const char* name, std::vector<std::string>& errors) {
    if (m.rows() != bins || m.cols() != bins) {
        errors.push_back(std::string(name) + " chain must be " + std::to_string(bins) + "x" + std::to_string(bins));
        return;
    }
    const auto report = check_stochastic(m);
    if (report.max_row_error > 1e-9 || report.min_entry < 0.0) {
        errors.push_back(std::string(name) + " chain is not row-stochastic");
    }
}

}  // namespace

void validate_wind_spec(const WindFarmSpec& s) {
    std::vector<std::string> errors;
    if (s.price_bins < 1 || s.mismatch_bins < 1) errors.push_back("bin counts must be positive");
    if (s.soc_bins < 2) errors.push_back("need at least two SoC bins");
    if (s.action_fractions.empty()) errors.push_back("need at least one action");
    for (double f : s.action_fractions) {
        if (!(f >= 0.0 && f <= 1.0)) errors.push_back("action fractions must lie in [0, 1]");
    }
    if (!(s.gamma > 0.0 && s.gamma < 1.0)) errors.push_back("discount must lie in (0, 1)");
    if (!(s.capacity > 0.0)) errors.push_back("capacity must be positive");
    if (!(s.charge_eff > 0.0 && s.charge_eff <= 1.0) || !(s.discharge_eff > 0.0 && s.discharge_eff <= 1.0)) {
        errors.push_back("efficiencies must lie in (0, 1]");
    }
    check_chain(s.price_chain, s.price_bins, "price", errors);
    check_chain(s.mismatch_chain, s.mismatch_bins, "mismatch", errors);
    if (s.price_values.size() != s.price_bins) errors.push_back("one price value per bin required");
    if (s.mismatch_values.size() != s.mismatch_bins) errors.push_back("one mismatch value per bin required");
    for (double p : s.price_values) {
        if (!(p >= 0.0) || !std::isfinite(p)) errors.push_back("prices must be finite and nonnegative");
    }
    for (double d : s.mismatch_values) {
        if (!std::isfinite(d)) errors.push_back("mismatch values must be finite");
    }
    if (!errors.empty()) {
        std::string msg = "invalid wind-farm spec:";
        for (const auto& e : errors) msg += "\n  " + e;
        throw ValidationError(msg);
    }
}

WindFarmSpec wind_spec_from_series(const CsvSeries& price, const CsvSeries& mismatch, std::size_t price_bins,
                                   std::size_t mismatch_bins) {
    WindFarmSpec spec;
    spec.price_bins = price_bins;
    spec.mismatch_bins = mismatch_bins;
    const auto price_edges = equal_width_edges(price, price_bins);
    const auto mismatch_edges = equal_width_edges(mismatch, mismatch_bins);
    spec.price_chain = estimate_chain(price, price_edges);
    spec.mismatch_chain = estimate_chain(mismatch, mismatch_edges);
    spec.price_values = bin_centers(price_edges);
    for (double& p : spec.price_values) p = std::max(p, 0.0);
    spec.mismatch_values = bin_centers(mismatch_edges);
    return spec;
}

WindStorageEnv::WindStorageEnv(WindFarmSpec spec) : spec_(std::move(spec)) {
    validate_wind_spec(spec_);
    space_ = space_for(spec_);
    price_cum_ = cumulative_rows(spec_.price_chain);
    mismatch_cum_ = cumulative_rows(spec_.mismatch_chain);

    double max_price = 0.0;
    double max_mismatch = 0.0;
    for (double p : spec_.price_values) max_price = std::max(max_price, p);
    for (double d : spec_.mismatch_values) max_mismatch = std::max(max_mismatch, std::abs(d));
    penalty_max_ = max_price * max_mismatch;

    const std::size_t n = space_.num_pairs();
    next_soc_.resize(n);
    penalty_.resize(n);
    reward_.resize(n);
    for (std::size_t x = 0; x < n; ++x) {
        const StorageStep st = step(x);
        next_soc_[x] = st.next_soc_bin;
        penalty_[x] = st.penalty;
        reward_[x] = penalty_max_ > 0.0 ? std::clamp(1.0 - st.penalty / penalty_max_, 0.0, 1.0) : 1.0;
    }
}

double WindStorageEnv::soc_level(std::size_t bin) const {
    return spec_.capacity * static_cast<double>(bin) / static_cast<double>(spec_.soc_bins - 1);
}

std::size_t WindStorageEnv::soc_bin(double soc) const {
    const double scaled = soc / spec_.capacity * static_cast<double>(spec_.soc_bins - 1);
    const double b = std::clamp(std::round(scaled), 0.0, static_cast<double>(spec_.soc_bins - 1));
    return static_cast<std::size_t>(b);
}

StorageStep WindStorageEnv::step(std::size_t pair) const {
    const double price = spec_.price_values[space_.digit(pair, kPrice)];
    const double mismatch = spec_.mismatch_values[space_.digit(pair, kMismatch)];
    const double soc = soc_level(space_.digit(pair, kSoc));
    const double fraction = spec_.action_fractions[space_.digit(pair, kAction)];

    StorageStep st;
    if (mismatch < 0.0) {
        // Surplus: store part of the excess generation.
        st.charge = std::min(fraction * -mismatch, (spec_.capacity - soc) / spec_.charge_eff);
        st.charge = std::max(st.charge, 0.0);
    } else if (mismatch > 0.0) {
        // Shortage: cover part of it from storage.
        st.discharge = std::min(fraction * mismatch, soc / spec_.discharge_eff);
        st.discharge = std::max(st.discharge, 0.0);
    }
    st.next_soc = soc + spec_.charge_eff * st.charge - spec_.discharge_eff * st.discharge;
    st.next_soc_bin = soc_bin(st.next_soc);
    // g - w_hat = (w + v- - v+) - w_hat = -mismatch + v- - v+.
    st.penalty = price * std::abs(-mismatch + st.discharge - st.charge);
    return st;
}

std::size_t WindStorageEnv::sample_next(std::size_t pair, RandomStream& rng) const {
    const double u_price = rng.uniform();
    const double u_mismatch = rng.uniform();
    const std::size_t p = draw(price_cum_, spec_.price_bins, space_.digit(pair, kPrice), u_price);
    const std::size_t d = draw(mismatch_cum_, spec_.mismatch_bins, space_.digit(pair, kMismatch), u_mismatch);
    const std::size_t coords[] = {p, d, next_soc_[pair], 0};
    return space_.flat_index(coords);
}

std::shared_ptr<TabularMdp> WindStorageEnv::tabular() const {
    const std::size_t n = space_.num_pairs();
    DenseMatrix kernel(n, space_.num_states());
    for (std::size_t x = 0; x < n; ++x) {
        const auto prow = spec_.price_chain.row(space_.digit(x, kPrice));
        const auto drow = spec_.mismatch_chain.row(space_.digit(x, kMismatch));
        for (std::size_t p = 0; p < prow.size(); ++p) {
            for (std::size_t d = 0; d < drow.size(); ++d) {
                const std::size_t coords[] = {p, d, next_soc_[x], 0};
                kernel(x, space_.flat_index(coords)) = prow[p] * drow[d];
            }
        }
    }
    return std::make_shared<TabularMdp>(space_, std::move(kernel), reward_, spec_.gamma);
}

QFunction WindStorageEnv::bellman(const QFunction& q) const {
    const auto v = state_values(q, space_);
    const std::size_t n = space_.num_pairs();
    QFunction out(n);
    for (std::size_t x = 0; x < n; ++x) {
        const auto prow = spec_.price_chain.row(space_.digit(x, kPrice));
        const auto drow = spec_.mismatch_chain.row(space_.digit(x, kMismatch));
        const std::size_t base = next_soc_[x] * space_.stride(kSoc);
        double acc = 0.0;
        for (std::size_t p = 0; p < prow.size(); ++p) {
            double inner = 0.0;
            for (std::size_t d = 0; d < drow.size(); ++d) inner += drow[d] * v[base + p + d * space_.stride(kMismatch)];
            acc += prow[p] * inner;
        }
        out[x] = reward_[x] + spec_.gamma * acc;
    }
    return out;
}

QFunction WindStorageEnv::optimal_q(double tol) const {
    if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
    const double threshold = tol * (1.0 - spec_.gamma) / spec_.gamma;
    QFunction q(space_.num_pairs());
    for (;;) {
        QFunction next = bellman(q);
        const double diff = q_error(next, q);
        q = std::move(next);
        if (diff <= threshold) return q;
    }
}

FactorizationScheme WindStorageEnv::factored_scheme() {
    return make_scheme({{kPrice}, {kMismatch}, {kSoc}}, {{kPrice}, {kMismatch}, {kMismatch, kSoc, kAction}},
                       {{kPrice, kMismatch, kSoc, kAction}});
}

FactoredSpace WindStorageEnv::space_for(const WindFarmSpec& spec) {
    return FactoredSpace({spec.price_bins, spec.mismatch_bins, spec.soc_bins}, {spec.action_fractions.size()});
}

FactorizationScheme WindStorageEnv::soc_action_scheme() {
    return make_scheme({{kPrice}, {kMismatch}, {kSoc}}, {{kPrice}, {kMismatch}, {kSoc, kAction}},
                       {{kPrice, kMismatch, kSoc, kAction}});
}

PolicyEvaluation evaluate_policy(const WindStorageEnv& env, const Policy& policy, std::size_t horizon,
                                 std::size_t episodes, std::uint64_t seed) {
    if (horizon == 0) throw DomainError("horizon must be at least 1");
    if (episodes == 0) throw DomainError("need at least one episode");
    const auto& space = env.space();
    if (policy.actions.size() != space.num_states()) throw ShapeError("policy does not match the state space");
    const auto& spec = env.spec();
    const std::size_t soc0 = env.soc_bin(spec.capacity / 2.0);

    double sum = 0.0;
    double sum_sq = 0.0;
    for (std::size_t e = 0; e < episodes; ++e) {
        RandomStream rng(derive_seed(seed, {e}));
        const std::size_t p = rng.below(spec.price_bins);
        const std::size_t d = rng.below(spec.mismatch_bins);
        const std::size_t coords[] = {p, d, soc0, 0};
        std::size_t state = space.flat_index(coords);
        double total = 0.0;
        for (std::size_t t = 0; t < horizon; ++t) {
            const std::size_t action = policy.actions[state];
            if (action >= space.num_actions()) throw IndexError("policy action out of range");
            const std::size_t pair = space.pair(state, action);
            total += env.penalty(pair);
            state = env.sample_next(pair, rng);
        }
        sum += total;
        sum_sq += total * total;
    }
    const double n = static_cast<double>(episodes);
    PolicyEvaluation out;
    out.mean_penalty = sum / n;
    if (episodes > 1) {
        const double var = std::max(0.0, (sum_sq - n * out.mean_penalty * out.mean_penalty) / (n - 1.0));
        out.std_error = std::sqrt(var / n);
    }
    return out;
}

}  // namespace afmdp
