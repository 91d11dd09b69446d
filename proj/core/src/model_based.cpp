#include "afmdp/model_based.hpp"

#include <cmath>

#include "afmdp/errors.hpp"

namespace afmdp {

MbqviResult mbqvi(const GenerativeModel& env, const MbqviConfig& config) {
    const auto& space = env.space();
    if (config.replicates == 0) throw DomainError("replicates must be at least 1");
    if (config.iterations == 0) throw DomainError("iterations must be at least 1");

    const SamplingPlan plan = plan_sampling(config.scheme, space, config.coloring);
    const SampleBatch batch = collect_samples(env, plan.sets, config.replicates, config.seed);

    MbqviResult result;
    result.model.scheme = config.scheme;
    result.model.marginals = estimate_marginals(batch, plan, config.scheme, space);

    std::vector<double> reward;
    if (config.oracle_reward) {
        reward.resize(space.num_pairs());
        for (std::size_t x = 0; x < reward.size(); ++x) reward[x] = env.reward(x);
    } else {
        RewardEstimate est = estimate_rewards(env, config.scheme);
        result.model.local_rewards = std::move(est.local);
        result.diagnostics.reward_queries = est.queries;
        reward = compose_reward(result.model, space);
    }
    const DenseMatrix kernel = compose_kernel(result.model, space);

    auto& diag = result.diagnostics;
    diag.grouping = plan.grouping;
    diag.n_entry = plan.n_entry();
    diag.total_samples = diag.n_entry * config.replicates + diag.reward_queries;

    QFunction q(space.num_pairs());
    diag.residuals.reserve(config.iterations);
    for (std::size_t t = 0; t < config.iterations; ++t) {
        QFunction next = bellman_apply(q, kernel, reward, env.discount(), space);
        diag.residuals.push_back(q_error(next, q));
        q = std::move(next);
    }
    result.q = std::move(q);
    return result;
}

std::size_t required_iterations(double eps, double gamma, double c_bar2) {
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("discount must lie in (0, 1)");
    if (!(c_bar2 > 0.0)) throw DomainError("c_bar2 must be positive");
    const double t = std::ceil(c_bar2 * std::log(1.0 / (eps * (1.0 - gamma))));
    return t < 1.0 ? 1 : static_cast<std::size_t>(t);
}

GroupingPlan reward_grouping(const FactorizationScheme& scheme, const FactoredSpace& space, ColoringMethod method) {
    const auto& scopes = scheme.reward.scopes;
    const auto reduction = reduce_inclusive(scopes);
    return color(build_conflict_graph(scopes, reduction.survivors, space), method);
}

SampleBound sample_bound(const FactorizationScheme& scheme, const FactoredSpace& space, const GroupingPlan& plan,
                         double eps, double delta, double gamma) {
    if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("discount must lie in (0, 1)");
    require_valid(scheme, space);

    SampleBound b;
    b.transition_cost = plan.total_cost();
    b.reward_cost = reward_grouping(scheme, space).total_cost();
    b.union_size = union_input_size(scheme, space);
    const double h = 1.0 - gamma;
    b.transition_term = kBoundC0 * static_cast<double>(b.transition_cost) *
                        std::log(kBoundC1 * static_cast<double>(b.union_size) / delta) / (eps * eps * h * h * h);
    b.reward_term = static_cast<double>(b.reward_cost);
    b.total = b.transition_term + b.reward_term;
    return b;
}

SampleBound sample_bound(const FactorizationScheme& scheme, const FactoredSpace& space, double eps, double delta,
                         double gamma) {
    return sample_bound(scheme, space, plan_sampling(scheme, space).grouping, eps, delta, gamma);
}

}  // namespace afmdp
