#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "afmdp/coloring.hpp"
#include "afmdp/factorization.hpp"
#include "afmdp/mdp.hpp"
#include "afmdp/sampling.hpp"

namespace afmdp {

struct MbqviConfig {
    FactorizationScheme scheme;
    /// Draws per joint-sampling-set entry (N).
    std::size_t replicates = 1;
    /// Value-iteration steps (T).
    std::size_t iterations = 1;
    std::uint64_t seed = 0;
    /// Iterate with the environment's true reward instead of the estimate.
    bool oracle_reward = false;
    ColoringMethod coloring = ColoringMethod::automatic;
};

struct MbqviDiagnostics {
    GroupingPlan grouping;
    std::size_t n_entry = 0;
    std::size_t reward_queries = 0;
    /// n_entry * replicates + reward_queries.
    std::size_t total_samples = 0;
    /// residuals[t] = |Q_{t+1} - Q_t|_inf.
    std::vector<double> residuals;
};

struct MbqviResult {
    QFunction q;
    FactoredModel model;
    MbqviDiagnostics diagnostics;
};

/// Model-based Q-value iteration on the factored empirical model: synchronous
/// sampling, marginal and reward estimation, composition, then `iterations`
/// Bellman steps from Q = 0.
MbqviResult mbqvi(const GenerativeModel& env, const MbqviConfig& config);

/// ceil(c_bar2 * ln(1 / (eps (1 - gamma)))), at least 1.
std::size_t required_iterations(double eps, double gamma, double c_bar2 = 4.0);

inline constexpr double kBoundC0 = 576.0;
inline constexpr double kBoundC1 = 24.0;

struct SampleBound {
    /// Sum of group costs of the transition plan.
    std::size_t transition_cost = 0;
    /// Sum of group costs of the reward-scope plan.
    std::size_t reward_cost = 0;
    /// |X[union of input scopes]|.
    std::size_t union_size = 0;
    double transition_term = 0.0;
    double reward_term = 0.0;
    double total = 0.0;
};

/// Sample-size sufficient for an eps-accurate estimate with probability
/// 1 - delta, up to the misspecification bias:
///   c0 * cost * ln(c1 * |X[union]| / delta) / (eps^2 (1 - gamma)^3) + reward cost
/// with c0 = 576, c1 = 24 and costs taken from the actual groupings.
SampleBound sample_bound(const FactorizationScheme& scheme, const FactoredSpace& space, const GroupingPlan& plan,
                         double eps, double delta, double gamma);
SampleBound sample_bound(const FactorizationScheme& scheme, const FactoredSpace& space, double eps, double delta,
                         double gamma);

/// Grouping of the reward scopes by the same inclusive/exclusive reduction.
GroupingPlan reward_grouping(const FactorizationScheme& scheme, const FactoredSpace& space,
                             ColoringMethod method = ColoringMethod::automatic);

}  // namespace afmdp
