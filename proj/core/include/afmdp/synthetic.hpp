#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "afmdp/factorization.hpp"
#include "afmdp/mdp.hpp"
#include "afmdp/rng.hpp"
#include "afmdp/sampling.hpp"

namespace afmdp {

struct SyntheticSpec {
    std::uint64_t seed = 0;
    std::size_t n_sub = 3;
    std::size_t sub_size = 5;
    std::size_t action_size = 5;
    /// Weight of the fully coupled kernel; 0 is perfectly factorizable.
    double coupling = 0.0;
    /// Dirichlet concentration of the coupled kernel's rows.
    double concentration = 0.1;
    double gamma = 0.9;
};

struct NamedScheme {
    std::string name;
    FactorizationScheme scheme;
};

/// A generated MDP together with its additive reward decomposition and the
/// schemes it is meant to be learned with.
struct SyntheticInstance {
    std::shared_ptr<const TabularMdp> mdp;
    RewardScheme native_reward;
    std::vector<std::vector<double>> native_local;
    std::vector<NamedScheme> schemes;

    const FactorizationScheme& scheme(const std::string& name) const;
    TabularGenerativeModel environment() const;
};

/// Independent per-substate chains; the last substate also depends on the
/// action. Schemes: "af" (one component per substate) and "trivial".
SyntheticInstance gen_perfect_mdp(const SyntheticSpec& spec);

/// (1 - coupling) * chain product + coupling * a seeded fully coupled kernel.
/// Schemes: "K<n>" (singletons), "K2" (two halves, action on the second) and
/// "K1" (trivial). Rewards are additive over the singleton scopes.
SyntheticInstance gen_imperfect_mdp(const SyntheticSpec& spec);

/// Gamma(shape, 1) variate (Marsaglia-Tsang, boosted below shape 1).
double sample_gamma(double shape, RandomStream& rng);

/// Dirichlet(alpha, ..., alpha) draw into `out`.
void sample_dirichlet(double alpha, std::span<double> out, RandomStream& rng);

}  // namespace afmdp
