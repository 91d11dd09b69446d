#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "afmdp/coloring.hpp"
#include "afmdp/factorization.hpp"
#include "afmdp/rng.hpp"

namespace afmdp {

/// Simulator that answers next-state and reward queries at any pair.
class GenerativeModel {
public:
    virtual ~GenerativeModel() = default;

    virtual const FactoredSpace& space() const = 0;
    virtual double discount() const = 0;
    /// Draws s' ~ P(. | pair) using `rng` as the only source of randomness.
    virtual std::size_t sample_next(std::size_t pair, RandomStream& rng) const = 0;
    virtual double reward(std::size_t pair) const = 0;

    /// Scopes of the environment's own additive reward decomposition, if any.
    virtual const RewardScheme* native_reward_scheme() const { return nullptr; }
    /// r_i(z) of the native decomposition.
    virtual double component_reward(std::size_t i, std::size_t z) const;
};

/// Generative model backed by a TabularMdp (inverse-CDF sampling on
/// precomputed cumulative rows).
class TabularGenerativeModel final : public GenerativeModel {
public:
    explicit TabularGenerativeModel(std::shared_ptr<const TabularMdp> mdp);
    /// Also exposes an additive reward decomposition; `local` must compose to
    /// the MDP's reward.
    TabularGenerativeModel(std::shared_ptr<const TabularMdp> mdp, RewardScheme native,
                           std::vector<std::vector<double>> local);

    const FactoredSpace& space() const override { return mdp_->space(); }
    double discount() const override { return mdp_->gamma(); }
    std::size_t sample_next(std::size_t pair, RandomStream& rng) const override;
    double reward(std::size_t pair) const override { return mdp_->reward()[pair]; }
    const RewardScheme* native_reward_scheme() const override { return native_ ? &*native_ : nullptr; }
    double component_reward(std::size_t i, std::size_t z) const override;

    const TabularMdp& mdp() const noexcept { return *mdp_; }
    std::shared_ptr<const TabularMdp> shared_mdp() const noexcept { return mdp_; }

private:
    std::shared_ptr<const TabularMdp> mdp_;
    std::vector<double> cumulative_;
    std::optional<RewardScheme> native_;
    std::vector<std::vector<double>> local_;
};

/// Forwards to another model and counts every query. Thread-safe.
class CountingGenerativeModel final : public GenerativeModel {
public:
    explicit CountingGenerativeModel(const GenerativeModel& inner) : inner_(inner) {}

    const FactoredSpace& space() const override { return inner_.space(); }
    double discount() const override { return inner_.discount(); }
    std::size_t sample_next(std::size_t pair, RandomStream& rng) const override;
    double reward(std::size_t pair) const override;
    const RewardScheme* native_reward_scheme() const override { return inner_.native_reward_scheme(); }
    double component_reward(std::size_t i, std::size_t z) const override;

    std::uint64_t transition_queries() const noexcept { return transitions_.load(); }
    std::uint64_t reward_queries() const noexcept { return rewards_.load(); }
    std::uint64_t total_queries() const noexcept { return transition_queries() + reward_queries(); }

private:
    const GenerativeModel& inner_;
    mutable std::atomic<std::uint64_t> transitions_{0};
    mutable std::atomic<std::uint64_t> rewards_{0};
};

/// Pairs queried for one group: entry i sets every member's input scope to
/// position (i mod |X[Z_j^P]|) of its canonical enumeration and copies
/// x_default elsewhere.
struct JointSamplingSet {
    std::size_t group = 0;
    std::vector<std::size_t> pairs;
};

std::vector<JointSamplingSet> build_joint_sampling_sets(const GroupingPlan& plan, const FactorizationScheme& scheme,
                                                        const FactoredSpace& space);

/// Everything needed to run synchronous sampling for a scheme.
struct SamplingPlan {
    InclusiveReduction reduction;
    ConflictGraph graph;
    GroupingPlan grouping;
    std::vector<JointSamplingSet> sets;
    /// group_of[k]: the group whose samples estimate component k.
    std::vector<std::size_t> group_of;

    /// Unique pairs per sampling pass: the sum of group costs.
    std::size_t n_entry() const noexcept { return grouping.total_cost(); }
};

SamplingPlan plan_sampling(const FactorizationScheme& scheme, const FactoredSpace& space,
                           ColoringMethod method = ColoringMethod::automatic);

/// next_states[g][e * replicates + r]: r-th draw at entry e of group g.
struct SampleBatch {
    std::size_t replicates = 0;
    std::vector<std::vector<std::size_t>> next_states;

    std::size_t at(std::size_t group, std::size_t entry, std::size_t rep) const {
        return next_states[group][entry * replicates + rep];
    }
    friend bool operator==(const SampleBatch&, const SampleBatch&) = default;
};

/// Draws `replicates` next states at every entry of every set. The stream for
/// (group, entry, replicate) is derive_seed(seed, {group, entry, replicate}),
/// so the batch does not depend on evaluation order.
SampleBatch collect_samples(const GenerativeModel& env, const std::vector<JointSamplingSet>& sets,
                            std::size_t replicates, std::uint64_t seed);

/// Empirical marginals for every component, dropped ones included (they count
/// every entry of their cover's group whose projection matches).
std::vector<MarginalKernel> estimate_marginals(const SampleBatch& batch, const SamplingPlan& plan,
                                               const FactorizationScheme& scheme, const FactoredSpace& space);

struct RewardEstimate {
    std::vector<std::vector<double>> local;
    std::size_t queries = 0;
};

/// Local rewards read natively when the environment's decomposition matches
/// the scheme, otherwise by the anchored-difference construction on queried
/// rewards.
RewardEstimate estimate_rewards(const GenerativeModel& env, const FactorizationScheme& scheme);

struct SamplingCost {
    std::size_t n_entry = 0;
    std::size_t total = 0;
};

SamplingCost sampling_cost(const GroupingPlan& plan, std::size_t replicates);

}  // namespace afmdp
