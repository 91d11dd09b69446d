#include "afmdp/model_free.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "afmdp/errors.hpp"

namespace afmdp {

namespace {

constexpr std::size_t kMissing = std::numeric_limits<std::size_t>::max();

std::vector<double> reward_vector(const GenerativeModel& env, const FactorizationScheme& scheme, bool oracle,
                                  std::size_t& queries) {
    const auto& space = env.space();
    if (oracle) {
        std::vector<double> r(space.num_pairs());
        for (std::size_t x = 0; x < r.size(); ++x) r[x] = env.reward(x);
        queries = 0;
        return r;
    }
    FactoredModel model;
    model.scheme = scheme;
    RewardEstimate est = estimate_rewards(env, scheme);
    queries = est.queries;
    model.local_rewards = std::move(est.local);
    return compose_reward(model, space);
}

}  // namespace

OneShotSampleTable generate_bellman_table(const GenerativeModel& env, const FactorizationScheme& scheme,
                                          const SamplingPlan& plan, std::uint64_t seed) {
    const auto& space = env.space();
    const SampleBatch batch = collect_samples(env, plan.sets, 1, seed);
    const std::size_t K = scheme.transition.size();
    OneShotSampleTable table;
    table.entries.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        const ScopeCodec input(space, scheme.transition.input_scopes[k]);
        const ScopeCodec state_codec(space, scheme.transition.state_scopes[k]);
        const std::size_t g = plan.group_of.at(k);
        const auto& pairs = plan.sets.at(g).pairs;
        auto& out = table.entries[k];
        out.assign(input.size(), kMissing);
        for (std::size_t e = 0; e < pairs.size(); ++e) {
            std::size_t& slot = out[input.project(pairs[e])];
            if (slot == kMissing) slot = state_codec.project(batch.at(g, e, 0));
        }
    }
    return table;
}

FactoredBellmanOperator::FactoredBellmanOperator(const FactorizationScheme& scheme, const FactoredSpace& space,
                                                 std::vector<double> reward, double gamma)
    : space_(space), reward_(std::move(reward)), gamma_(gamma) {
    require_valid(scheme, space);
    if (reward_.size() != space.num_pairs()) throw ShapeError("reward vector does not match the space");
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("discount must lie in (0, 1)");
    const std::size_t K = scheme.transition.size();
    for (std::size_t k = 0; k < K; ++k) {
        const ScopeCodec input(space, scheme.transition.input_scopes[k]);
        const ScopeCodec state_codec(space, scheme.transition.state_scopes[k]);
        input_index_.push_back(input.projection_table(space.num_pairs()));
        std::vector<std::size_t> offsets(state_codec.size());
        for (std::size_t z = 0; z < offsets.size(); ++z) offsets[z] = state_codec.offset(z);
        state_offset_.push_back(std::move(offsets));
    }
}

std::vector<std::size_t> FactoredBellmanOperator::next_states(const OneShotSampleTable& table) const {
    const std::size_t K = input_index_.size();
    if (table.entries.size() != K) throw ShapeError("table does not match the scheme");
    const std::size_t n = space_.num_pairs();
    std::vector<std::size_t> next(n, 0);
    for (std::size_t k = 0; k < K; ++k) {
        const auto& entries = table.entries[k];
        const auto& index = input_index_[k];
        const auto& offsets = state_offset_[k];
        for (std::size_t x = 0; x < n; ++x) {
            const std::size_t z = index[x];
            if (z >= entries.size() || entries[z] == kMissing) {
                throw CoverageError("table has no sample for component " + std::to_string(k) + " at scope value " +
                                    std::to_string(z));
            }
            next[x] += offsets.at(entries[z]);
        }
    }
    return next;
}

QFunction FactoredBellmanOperator::apply_values(const std::vector<std::size_t>& next,
                                                const std::vector<double>& v) const {
    QFunction out(next.size());
    for (std::size_t x = 0; x < next.size(); ++x) out[x] = reward_[x] + gamma_ * v[next[x]];
    return out;
}

QFunction FactoredBellmanOperator::apply(const std::vector<std::size_t>& next, const QFunction& q) const {
    if (q.size() != space_.num_pairs()) throw ShapeError("Q-function does not match the space");
    return apply_values(next, state_values(q, space_));
}

QFunction apply_factored_bellman(const OneShotSampleTable& table, const QFunction& q, std::span<const double> reward,
                                 const FactorizationScheme& scheme, const FactoredSpace& space, double gamma) {
    const FactoredBellmanOperator op(scheme, space, std::vector<double>(reward.begin(), reward.end()), gamma);
    return op.apply(table, q);
}

std::uint64_t vrql_table_seed(std::uint64_t seed, std::size_t epoch, TableRole role, std::size_t index) noexcept {
    return derive_seed(seed, {epoch, static_cast<std::uint64_t>(role), index});
}

QFunction reference_operator(const GenerativeModel& env, const FactorizationScheme& scheme, const SamplingPlan& plan,
                             const FactoredBellmanOperator& op, const QFunction& q_ref, std::size_t count,
                             std::uint64_t seed, const std::function<std::uint64_t(std::size_t)>& seed_of) {
    if (count == 0) throw DomainError("reference sample size must be at least 1");
    const auto v = state_values(q_ref, op.space());
    QFunction mean(op.space().num_pairs());
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint64_t s = seed_of ? seed_of(i) : derive_seed(seed, {i});
        const QFunction b = op.apply_values(op.next_states(generate_bellman_table(env, scheme, plan, s)), v);
        // Running mean: identical operands leave the mean bit-exact.
        const double inv = 1.0 / static_cast<double>(i + 1);
        for (std::size_t x = 0; x < mean.size(); ++x) mean[x] += (b[x] - mean[x]) * inv;
    }
    return mean;
}

double learning_rate(std::size_t t, double gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("discount must lie in (0, 1]");
    return 1.0 / (1.0 + (1.0 - gamma) * static_cast<double>(t + 1));
}

EpochSchedule epoch_schedule(double eps, double delta, double gamma, const FactorizationScheme& scheme,
                             const FactoredSpace& space, const ScheduleConstants& c) {
    if (!(eps > 0.0)) throw DomainError("eps must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("discount must lie in (0, 1)");
    if (!(c.c1 > 0.0 && c.c2 > 0.0 && c.c3 > 0.0)) throw DomainError("schedule constants must be positive");
    const double h = 1.0 - gamma;
    const double u = static_cast<double>(union_input_size(scheme, space));

    EpochSchedule s;
    const double t = std::ceil(c.c1 * std::log(1.0 / (h * eps)));
    s.epochs = t < 1.0 ? 1 : static_cast<std::size_t>(t);
    const double T = static_cast<double>(s.epochs);
    s.inner = static_cast<std::size_t>(std::max(1.0, std::ceil(c.c2 * std::log(6.0 * T * u / (h * delta)) / (h * h * h))));
    const double base = c.c3 * std::log(6.0 * T * u) / (h * h);
    for (std::size_t tau = 1; tau <= s.epochs; ++tau) {
        const double n = std::ceil(std::pow(4.0, static_cast<double>(tau)) * base);
        s.reference_sizes.push_back(static_cast<std::size_t>(std::max(1.0, n)));
    }
    return s;
}

std::size_t vrql_sample_count(std::size_t n_entry, std::size_t reward_queries, std::size_t inner,
                              const std::vector<std::size_t>& reference_sizes) {
    std::size_t total = reward_queries;
    for (std::size_t n : reference_sizes) total += (n + inner) * n_entry;
    return total;
}

VrqlResult vrql_af(const GenerativeModel& env, const VrqlConfig& config) {
    if (config.epochs == 0) throw DomainError("epochs must be at least 1");
    if (config.inner == 0) throw DomainError("inner iterations must be at least 1");
    if (config.reference_sizes.size() != config.epochs) {
        throw ShapeError("need one reference sample size per epoch");
    }
    for (std::size_t n : config.reference_sizes) {
        if (n == 0) throw DomainError("reference sample sizes must be at least 1");
    }
    const auto& space = env.space();
    const double gamma = env.discount();
    const SamplingPlan plan = plan_sampling(config.scheme, space, config.coloring);

    VrqlResult result;
    auto& diag = result.diagnostics;
    diag.n_entry = plan.n_entry();
    const FactoredBellmanOperator op(config.scheme, space,
                                     reward_vector(env, config.scheme, config.oracle_reward, diag.reward_queries),
                                     gamma);

    const std::size_t n = space.num_pairs();
    QFunction anchor(n);
    std::size_t samples = diag.reward_queries;
    diag.min_value = 0.0;
    diag.max_value = 0.0;
    for (std::size_t tau = 1; tau <= config.epochs; ++tau) {
        const QFunction reference = reference_operator(
            env, config.scheme, plan, op, anchor, config.reference_sizes[tau - 1], config.seed,
            [&](std::size_t i) { return vrql_table_seed(config.seed, tau, TableRole::reference, i); });
        const auto anchor_values = state_values(anchor, space);

        QFunction q = anchor;
        for (std::size_t t = 0; t < config.inner; ++t) {
            const auto next = op.next_states(
                generate_bellman_table(env, config.scheme, plan, vrql_table_seed(config.seed, tau, TableRole::inner, t)));
            const QFunction h_q = op.apply(next, q);
            const QFunction h_anchor = op.apply_values(next, anchor_values);
            const double eta = learning_rate(t, gamma);
            for (std::size_t x = 0; x < n; ++x) {
                const double target = h_q[x] + (reference[x] - h_anchor[x]);
                q[x] += eta * (target - q[x]);
                diag.min_value = std::min(diag.min_value, q[x]);
                diag.max_value = std::max(diag.max_value, q[x]);
            }
            if (config.on_inner_step) config.on_inner_step(tau, t, q);
        }
        anchor = std::move(q);
        samples += (config.reference_sizes[tau - 1] + config.inner) * diag.n_entry;
        EpochRecord rec;
        rec.epoch = tau;
        rec.q_error = config.oracle_q ? q_error(anchor, *config.oracle_q) : std::numeric_limits<double>::quiet_NaN();
        rec.samples_cumulative = samples;
        diag.epochs.push_back(rec);
    }
    result.q = std::move(anchor);
    return result;
}

}  // namespace afmdp
