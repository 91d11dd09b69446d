#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "afmdp/factorization.hpp"
#include "afmdp/mdp.hpp"
#include "afmdp/sampling.hpp"

namespace afmdp {

/// One sampled sub-next-state per scope value of every component.
///
/// entries[k][z] is the S[Z_k^S] sub-index drawn for input scope value z of
/// component k.
struct OneShotSampleTable {
    std::vector<std::vector<std::size_t>> entries;
    friend bool operator==(const OneShotSampleTable&, const OneShotSampleTable&) = default;
};

/// One draw at every joint-sampling-set entry (streams derive_seed(seed,
/// {group, entry, 0})). When several entries project to the same scope value,
/// the first entry in set order supplies the sample.
OneShotSampleTable generate_bellman_table(const GenerativeModel& env, const FactorizationScheme& scheme,
                                          const SamplingPlan& plan, std::uint64_t seed);

/// Precomputed projections for applying one-shot operators quickly.
class FactoredBellmanOperator {
public:
    FactoredBellmanOperator(const FactorizationScheme& scheme, const FactoredSpace& space,
                            std::vector<double> reward, double gamma);

    const FactoredSpace& space() const noexcept { return space_; }
    const std::vector<double>& reward() const noexcept { return reward_; }
    double gamma() const noexcept { return gamma_; }

    /// Synthetic next state of every pair under `table`.
    /// Throws CoverageError when the table lacks a key.
    std::vector<std::size_t> next_states(const OneShotSampleTable& table) const;

    /// r(x) + gamma * max_a q(next[x], a).
    QFunction apply(const std::vector<std::size_t>& next, const QFunction& q) const;
    /// Same, with V = max_a q precomputed.
    QFunction apply_values(const std::vector<std::size_t>& next, const std::vector<double>& v) const;
    QFunction apply(const OneShotSampleTable& table, const QFunction& q) const { return apply(next_states(table), q); }

private:
    FactoredSpace space_;
    std::vector<double> reward_;
    double gamma_;
    std::vector<std::vector<std::size_t>> input_index_;   // [k][x] -> X[Z_k^P] sub-index
    std::vector<std::vector<std::size_t>> state_offset_;  // [k][sub] -> flat state contribution
};

/// Single-call form of FactoredBellmanOperator::apply.
QFunction apply_factored_bellman(const OneShotSampleTable& table, const QFunction& q, std::span<const double> reward,
                                 const FactorizationScheme& scheme, const FactoredSpace& space, double gamma);

/// Role counter in the seed of a VRQL-AF table.
enum class TableRole : std::uint64_t { reference = 0, inner = 1 };

/// Seed of table `index` of the given role in epoch `epoch` (from 1).
std::uint64_t vrql_table_seed(std::uint64_t seed, std::size_t epoch, TableRole role, std::size_t index) noexcept;

/// Mean of `count` one-shot operators applied to q_ref; table i uses
/// derive_seed(seed, {i}) unless `seed_of` is given.
QFunction reference_operator(const GenerativeModel& env, const FactorizationScheme& scheme, const SamplingPlan& plan,
                             const FactoredBellmanOperator& op, const QFunction& q_ref, std::size_t count,
                             std::uint64_t seed, const std::function<std::uint64_t(std::size_t)>& seed_of = {});

/// eta_t = 1 / (1 + (1 - gamma)(t + 1)).
double learning_rate(std::size_t t, double gamma);

struct EpochSchedule {
    std::size_t epochs = 1;
    std::size_t inner = 1;
    /// reference_sizes[tau - 1] = N_tau.
    std::vector<std::size_t> reference_sizes;
    std::size_t reference_size(std::size_t tau) const { return reference_sizes.at(tau - 1); }
};

struct ScheduleConstants {
    double c1 = 1.0;
    double c2 = 1.0;
    double c3 = 1.0;
};

/// T = ceil(c1 ln(1/((1-g) eps))) (at least 1),
/// M = ceil(c2 ln(6 T |X[union]| / ((1-g) delta)) / (1-g)^3),
/// N_tau = ceil(c3 4^tau ln(6 T |X[union]|) / (1-g)^2).
EpochSchedule epoch_schedule(double eps, double delta, double gamma, const FactorizationScheme& scheme,
                             const FactoredSpace& space, const ScheduleConstants& constants = {});

struct VrqlConfig {
    FactorizationScheme scheme;
    std::size_t epochs = 1;
    std::size_t inner = 1;
    std::vector<std::size_t> reference_sizes;
    std::uint64_t seed = 0;
    bool oracle_reward = false;
    ColoringMethod coloring = ColoringMethod::automatic;
    /// Scored after every epoch when set.
    std::optional<QFunction> oracle_q;
    /// Called after every inner update with (epoch, t, Q_{t+1}).
    std::function<void(std::size_t, std::size_t, const QFunction&)> on_inner_step;
};

struct EpochRecord {
    std::size_t epoch = 0;
    /// NaN without an oracle.
    double q_error = 0.0;
    std::size_t samples_cumulative = 0;
};

struct VrqlDiagnostics {
    std::size_t n_entry = 0;
    std::size_t reward_queries = 0;
    std::vector<EpochRecord> epochs;
    /// Extremes over every inner iterate.
    double min_value = 0.0;
    double max_value = 0.0;
    std::size_t total_samples() const noexcept { return epochs.empty() ? reward_queries : epochs.back().samples_cumulative; }
};

struct VrqlResult {
    QFunction q;
    VrqlDiagnostics diagnostics;
};

/// Variance-reduced Q-learning on one-shot factored operators. Each inner
/// step draws one table and evaluates both the current iterate and the epoch
/// anchor on it.
VrqlResult vrql_af(const GenerativeModel& env, const VrqlConfig& config);

/// reward_queries + sum_tau (N_tau + M) * n_entry.
std::size_t vrql_sample_count(std::size_t n_entry, std::size_t reward_queries, std::size_t inner,
                              const std::vector<std::size_t>& reference_sizes);

}  // namespace afmdp
