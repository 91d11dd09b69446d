#include "afmdp/factorization.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "afmdp/errors.hpp"

namespace afmdp {

namespace {

std::string idx(std::size_t v) { return std::to_string(v); }

void check_scope(const Scope& scope, std::size_t limit, const std::string& label, std::vector<std::string>& out) {
    if (scope.empty()) {
        out.push_back(label + " is empty");
        return;
    }
    for (std::size_t d : scope) {
        if (d >= limit) out.push_back(label + ": index " + idx(d) + " out of range (limit " + idx(limit) + ")");
    }
    if (std::adjacent_find(scope.begin(), scope.end(), std::greater_equal<>()) != scope.end()) {
        out.push_back(label + " is not sorted and duplicate-free");
    }
}

// Marginal of component k with ignored coordinates taken from `anchor`.
DenseMatrix marginal_at(const TabularMdp& mdp, const ScopeCodec& input, const ScopeCodec& state_codec,
                        std::size_t anchor) {
    const auto& kernel = mdp.kernel();
    const std::size_t states = mdp.space().num_states();
    // Column projection of every next state onto the component's state scope.
    const auto col = state_codec.projection_table(states);
    DenseMatrix table(input.size(), state_codec.size());
    for (std::size_t z = 0; z < input.size(); ++z) {
        const auto row = kernel.row(input.embed(z, anchor));
        auto out = table.row(z);
        for (std::size_t s = 0; s < states; ++s) out[col[s]] += row[s];
    }
    return table;
}

}  // namespace

FactorizationScheme make_scheme(std::vector<Scope> state_scopes, std::vector<Scope> input_scopes,
                                std::vector<Scope> reward_scopes, std::size_t x_default) {
    FactorizationScheme scheme;
    for (auto& s : state_scopes) scheme.transition.state_scopes.push_back(normalize_scope(std::move(s)));
    for (auto& s : input_scopes) scheme.transition.input_scopes.push_back(normalize_scope(std::move(s)));
    for (auto& s : reward_scopes) scheme.reward.scopes.push_back(normalize_scope(std::move(s)));
    scheme.x_default = x_default;
    return scheme;
}

FactorizationScheme trivial_scheme(const FactoredSpace& space, std::size_t x_default) {
    Scope states(space.num_state_dims());
    std::iota(states.begin(), states.end(), 0);
    Scope all(space.num_dims());
    std::iota(all.begin(), all.end(), 0);
    return make_scheme({states}, {all}, {all}, x_default);
}

std::vector<std::string> validate_scheme(const FactorizationScheme& scheme, const FactoredSpace& space) {
    std::vector<std::string> out;
    const std::size_t n = space.num_state_dims();
    const std::size_t nm = space.num_dims();
    const auto& tr = scheme.transition;

    if (tr.state_scopes.empty()) out.push_back("transition scheme has no components");
    if (tr.state_scopes.size() != tr.input_scopes.size()) {
        out.push_back("transition scheme has " + idx(tr.state_scopes.size()) + " state scopes but " +
                      idx(tr.input_scopes.size()) + " input scopes");
    }

    std::vector<std::size_t> cover(n, 0);
    for (std::size_t k = 0; k < tr.state_scopes.size(); ++k) {
        check_scope(tr.state_scopes[k], n, "state scope " + idx(k), out);
        for (std::size_t d : tr.state_scopes[k]) {
            if (d < n) ++cover[d];
        }
    }
    for (std::size_t d = 0; d < n; ++d) {
        if (cover[d] > 1) out.push_back("not a partition: index " + idx(d) + " repeated");
        if (cover[d] == 0) out.push_back("not a partition: index " + idx(d) + " uncovered");
    }
    for (std::size_t k = 0; k < tr.input_scopes.size(); ++k) {
        check_scope(tr.input_scopes[k], nm, "input scope " + idx(k), out);
    }

    if (scheme.reward.scopes.empty()) out.push_back("reward scheme has no components");
    for (std::size_t i = 0; i < scheme.reward.scopes.size(); ++i) {
        check_scope(scheme.reward.scopes[i], nm, "reward scope " + idx(i), out);
    }
    if (scheme.x_default >= space.num_pairs()) {
        out.push_back("x_default " + idx(scheme.x_default) + " out of range (|X| = " + idx(space.num_pairs()) + ")");
    }
    return out;
}

void require_valid(const FactorizationScheme& scheme, const FactoredSpace& space) {
    const auto violations = validate_scheme(scheme, space);
    if (violations.empty()) return;
    std::string message = "invalid factorization scheme:";
    for (const auto& v : violations) message += "\n  " + v;
    throw ValidationError(message);
}

std::size_t union_input_size(const FactorizationScheme& scheme, const FactoredSpace& space) {
    Scope all;
    for (const auto& z : scheme.transition.input_scopes) all = scope_union(all, z);
    return ScopeCodec(space, all).size();
}

MarginalKernel exact_marginal(const TabularMdp& mdp, const FactorizationScheme& scheme, std::size_t k) {
    require_valid(scheme, mdp.space());
    if (k >= scheme.transition.size()) throw IndexError("component index " + idx(k) + " out of range");
    const ScopeCodec input(mdp.space(), scheme.transition.input_scopes[k]);
    const ScopeCodec state_codec(mdp.space(), scheme.transition.state_scopes[k]);
    return {k, marginal_at(mdp, input, state_codec, scheme.x_default)};
}

std::vector<MarginalKernel> exact_marginals(const TabularMdp& mdp, const FactorizationScheme& scheme) {
    std::vector<MarginalKernel> out;
    for (std::size_t k = 0; k < scheme.transition.size(); ++k) out.push_back(exact_marginal(mdp, scheme, k));
    return out;
}

DenseMatrix compose_kernel(const FactoredModel& model, const FactoredSpace& space) {
    const auto& tr = model.scheme.transition;
    const std::size_t K = tr.size();
    if (model.marginals.size() != K) throw ShapeError("model has the wrong number of marginals");
    const std::size_t pairs = space.num_pairs();
    const std::size_t states = space.num_states();

    std::vector<std::vector<std::size_t>> row_proj(K), col_proj(K);
    for (std::size_t k = 0; k < K; ++k) {
        const ScopeCodec input(space, tr.input_scopes[k]);
        const ScopeCodec state_codec(space, tr.state_scopes[k]);
        const auto& table = model.marginals[k].table;
        if (table.rows() != input.size() || table.cols() != state_codec.size()) {
            throw ShapeError("marginal " + idx(k) + " has shape " + idx(table.rows()) + "x" + idx(table.cols()) +
                             ", expected " + idx(input.size()) + "x" + idx(state_codec.size()));
        }
        row_proj[k] = input.projection_table(pairs);
        col_proj[k] = state_codec.projection_table(states);
    }

    DenseMatrix out(pairs, states, 1.0);
    for (std::size_t x = 0; x < pairs; ++x) {
        auto row = out.row(x);
        for (std::size_t k = 0; k < K; ++k) {
            const auto factor = model.marginals[k].table.row(row_proj[k][x]);
            const auto& cols = col_proj[k];
            for (std::size_t s = 0; s < states; ++s) row[s] *= factor[cols[s]];
        }
    }
    return out;
}

std::vector<double> compose_reward(const FactoredModel& model, const FactoredSpace& space) {
    const auto& scopes = model.scheme.reward.scopes;
    if (model.local_rewards.size() != scopes.size()) throw ShapeError("model has the wrong number of local rewards");
    const std::size_t pairs = space.num_pairs();
    std::vector<double> out(pairs, 0.0);
    for (std::size_t i = 0; i < scopes.size(); ++i) {
        const ScopeCodec codec(space, scopes[i]);
        if (model.local_rewards[i].size() != codec.size()) {
            throw ShapeError("local reward " + idx(i) + " has size " + idx(model.local_rewards[i].size()) +
                             ", expected " + idx(codec.size()));
        }
        for (std::size_t x = 0; x < pairs; ++x) out[x] += model.local_rewards[i][codec.project(x)];
    }
    return out;
}

std::vector<std::vector<double>> best_local_rewards(const TabularMdp& mdp, const FactorizationScheme& scheme) {
    require_valid(scheme, mdp.space());
    const auto& r = mdp.reward();
    const std::size_t L = scheme.reward.size();
    const double correction = static_cast<double>(L - 1) / static_cast<double>(L) * r[scheme.x_default];
    std::vector<std::vector<double>> out;
    for (const auto& scope : scheme.reward.scopes) {
        const ScopeCodec codec(mdp.space(), scope);
        std::vector<double> local(codec.size());
        for (std::size_t z = 0; z < codec.size(); ++z) local[z] = r[codec.embed(z, scheme.x_default)] - correction;
        out.push_back(std::move(local));
    }
    return out;
}

double transition_approx_error(const TabularMdp& mdp, const FactorizationScheme& scheme, ApproxErrorMode mode) {
    require_valid(scheme, mdp.space());
    const auto& space = mdp.space();
    const std::size_t pairs = space.num_pairs();
    const std::size_t states = space.num_states();
    const std::size_t K = scheme.transition.size();

    if (mode == ApproxErrorMode::anchored) {
        const FactoredModel model{scheme, exact_marginals(mdp, scheme), {}};
        const DenseMatrix composed = compose_kernel(model, space);
        double err = 0.0;
        for (std::size_t i = 0; i < composed.data().size(); ++i) {
            err = std::max(err, std::abs(composed.data()[i] - mdp.kernel().data()[i]));
        }
        return err;
    }

    std::size_t combos = 1;
    for (std::size_t k = 0; k < K; ++k) {
        const std::size_t vertices = pairs / ScopeCodec(space, scheme.transition.input_scopes[k]).size();
        if (combos > kSupVertexGuard / vertices) {
            throw CapacityError("sup_vertices enumeration exceeds " + idx(kSupVertexGuard) +
                                " anchor combinations; use anchored mode");
        }
        combos *= vertices;
    }

    // Every factor is a convex combination of vertex marginals (one per
    // assignment of the ignored coordinates) and all factors are nonnegative,
    // so the product ranges exactly over [prod_k min_v, prod_k max_v] for each
    // (x, s'), and the supremum of |P - product| sits at one of the two ends.
    std::vector<DenseMatrix> lo(K), hi(K);
    std::vector<std::vector<std::size_t>> row_proj(K), col_proj(K);
    for (std::size_t k = 0; k < K; ++k) {
        const ScopeCodec input(space, scheme.transition.input_scopes[k]);
        const ScopeCodec state_codec(space, scheme.transition.state_scopes[k]);
        const ScopeCodec rest(space, scope_complement(input.scope(), space.num_dims()));
        for (std::size_t v = 0; v < rest.size(); ++v) {
            const DenseMatrix m = marginal_at(mdp, input, state_codec, rest.offset(v));
            if (v == 0) {
                lo[k] = m;
                hi[k] = m;
                continue;
            }
            for (std::size_t r = 0; r < m.rows(); ++r) {
                for (std::size_t c = 0; c < m.cols(); ++c) {
                    lo[k](r, c) = std::min(lo[k](r, c), m(r, c));
                    hi[k](r, c) = std::max(hi[k](r, c), m(r, c));
                }
            }
        }
        row_proj[k] = input.projection_table(pairs);
        col_proj[k] = state_codec.projection_table(states);
    }

    double err = 0.0;
    for (std::size_t x = 0; x < pairs; ++x) {
        for (std::size_t s = 0; s < states; ++s) {
            double pmin = 1.0;
            double pmax = 1.0;
            for (std::size_t k = 0; k < K; ++k) {
                pmin *= lo[k](row_proj[k][x], col_proj[k][s]);
                pmax *= hi[k](row_proj[k][x], col_proj[k][s]);
            }
            const double p = mdp.kernel()(x, s);
            err = std::max({err, p - pmin, pmax - p});
        }
    }
    return err;
}

double reward_approx_error(const TabularMdp& mdp, const FactorizationScheme& scheme,
                           const std::vector<std::vector<double>>& local_rewards) {
    const FactoredModel model{scheme, {}, local_rewards};
    const auto approx = compose_reward(model, mdp.space());
    double err = 0.0;
    for (std::size_t x = 0; x < approx.size(); ++x) err = std::max(err, std::abs(approx[x] - mdp.reward()[x]));
    return err;
}

double misspecification_bias(double delta_p, double delta_r, double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("discount must lie in (0, 1)");
    if (!(delta_p >= 0.0 && delta_r >= 0.0)) throw DomainError("approximation errors must be nonnegative");
    const double h = 1.0 / (1.0 - gamma);
    return gamma * h * h * delta_p + h * delta_r;
}

}  // namespace afmdp
