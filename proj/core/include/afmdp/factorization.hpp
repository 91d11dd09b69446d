#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "afmdp/mdp.hpp"
#include "afmdp/space.hpp"

namespace afmdp {

/// Transition part of an approximate factorization: component k predicts the
/// next-state dims `state_scopes[k]` from the pair dims `input_scopes[k]`.
/// State scopes index [0, n); input scopes index [0, n + m) with action dims
/// at n..n+m-1.
struct TransitionScheme {
    std::vector<Scope> state_scopes;
    std::vector<Scope> input_scopes;

    std::size_t size() const noexcept { return state_scopes.size(); }
};

/// Reward part: r(x) is approximated by sum_i r_i(x[scopes[i]]).
struct RewardScheme {
    std::vector<Scope> scopes;

    std::size_t size() const noexcept { return scopes.size(); }
};

struct FactorizationScheme {
    TransitionScheme transition;
    RewardScheme reward;
    /// Anchor pair whose coordinates fill every dimension a component ignores.
    std::size_t x_default = 0;
};

/// Builds a scheme with every scope sorted and deduplicated.
FactorizationScheme make_scheme(std::vector<Scope> state_scopes, std::vector<Scope> input_scopes,
                                std::vector<Scope> reward_scopes, std::size_t x_default = 0);

/// K = 1, L = 1: one component over every dimension.
FactorizationScheme trivial_scheme(const FactoredSpace& space, std::size_t x_default = 0);

/// Every violated structural requirement, as human-readable messages. Empty
/// when the scheme is valid for `space`.
std::vector<std::string> validate_scheme(const FactorizationScheme& scheme, const FactoredSpace& space);

/// Throws ValidationError listing every violation.
void require_valid(const FactorizationScheme& scheme, const FactoredSpace& space);

/// |X[union of all input scopes]|.
std::size_t union_input_size(const FactorizationScheme& scheme, const FactoredSpace& space);

/// P_k(s'[Z_k^S] | x[Z_k^P]): rows indexed by the X[Z_k^P] sub-index, columns
/// by the S[Z_k^S] sub-index.
struct MarginalKernel {
    std::size_t component = 0;
    DenseMatrix table;
};

struct FactoredModel {
    FactorizationScheme scheme;
    std::vector<MarginalKernel> marginals;
    /// local_rewards[i] is indexed by the X[Z_i^R] sub-index.
    std::vector<std::vector<double>> local_rewards;
};

/// Marginal of component k with the ignored coordinates pinned to x_default.
MarginalKernel exact_marginal(const TabularMdp& mdp, const FactorizationScheme& scheme, std::size_t k);
std::vector<MarginalKernel> exact_marginals(const TabularMdp& mdp, const FactorizationScheme& scheme);

/// P_hat(s'|x) = prod_k P_k(s'[Z_k^S] | x[Z_k^P]).
DenseMatrix compose_kernel(const FactoredModel& model, const FactoredSpace& space);

/// r_hat(x) = sum_i r_i(x[Z_i^R]).
std::vector<double> compose_reward(const FactoredModel& model, const FactoredSpace& space);

/// Anchored-difference local rewards:
///   r_i(z) = r(z, x_default[-Z_i^R]) - ((L - 1) / L) * r(x_default).
/// Exact whenever r is additive over disjoint reward scopes.
std::vector<std::vector<double>> best_local_rewards(const TabularMdp& mdp, const FactorizationScheme& scheme);

enum class ApproxErrorMode {
    anchored,      // the deployed marginals (point mass at x_default)
    sup_vertices,  // supremum over all feasible marginal choices
};

/// Maximum entries of prod_k |X[-Z_k^P]| allowed in sup_vertices mode.
inline constexpr std::size_t kSupVertexGuard = 1'000'000;

/// Delta^P: max over (s', x) of |P(s'|x) - prod_k P_k(s'[Z_k^S]|x[Z_k^P])|.
double transition_approx_error(const TabularMdp& mdp, const FactorizationScheme& scheme,
                               ApproxErrorMode mode = ApproxErrorMode::anchored);

/// Delta^R: max over x of |r(x) - sum_i r_i(x[Z_i^R])|.
double reward_approx_error(const TabularMdp& mdp, const FactorizationScheme& scheme,
                           const std::vector<std::vector<double>>& local_rewards);

/// gamma (1 - gamma)^-2 Delta^P + (1 - gamma)^-1 Delta^R.
double misspecification_bias(double delta_p, double delta_r, double gamma);

}  // namespace afmdp
