#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "afmdp/factorization.hpp"
#include "afmdp/mdp.hpp"
#include "afmdp/sampling.hpp"
#include "afmdp/series.hpp"
#include "afmdp/synthetic.hpp"

namespace afmdp {

/// Storage control for a wind farm with a supply commitment.
///
/// State (price bin, mismatch bin, SoC bin); mismatch is committed minus
/// actual generation, so a negative value is a surplus. Action i offsets
/// `action_fractions[i]` of the mismatch with the storage.
struct WindFarmSpec {
    std::size_t price_bins = 8;
    std::size_t mismatch_bins = 8;
    std::size_t soc_bins = 50;
    std::vector<double> action_fractions{1.0, 0.5, 0.0};
    double gamma = 0.9;
    double capacity = 500.0;
    double charge_eff = 0.95;
    double discharge_eff = 0.95;
    DenseMatrix price_chain;
    DenseMatrix mismatch_chain;
    /// Representative physical value of each bin.
    std::vector<double> price_values;
    std::vector<double> mismatch_values;
};

/// Validates the spec; throws ValidationError.
void validate_wind_spec(const WindFarmSpec& spec);

/// Spec with chains estimated from the series on equal-width bins.
WindFarmSpec wind_spec_from_series(const CsvSeries& price, const CsvSeries& mismatch, std::size_t price_bins = 8,
                                   std::size_t mismatch_bins = 8);

struct StorageStep {
    double charge = 0.0;     // v+
    double discharge = 0.0;  // v-
    double next_soc = 0.0;
    std::size_t next_soc_bin = 0;
    double penalty = 0.0;
};

/// Generative model with a structured sampler: one uniform moves the price
/// chain, one the mismatch chain, and the SoC update is deterministic.
class WindStorageEnv final : public GenerativeModel {
public:
    explicit WindStorageEnv(WindFarmSpec spec);

    const WindFarmSpec& spec() const noexcept { return spec_; }
    const FactoredSpace& space() const override { return space_; }
    double discount() const override { return spec_.gamma; }
    std::size_t sample_next(std::size_t pair, RandomStream& rng) const override;
    double reward(std::size_t pair) const override { return reward_[pair]; }

    double soc_level(std::size_t bin) const;
    /// Nearest SoC bin.
    std::size_t soc_bin(double soc) const;
    StorageStep step(std::size_t pair) const;
    /// Un-normalized penalty p * |g - w_hat|.
    double penalty(std::size_t pair) const { return penalty_[pair]; }
    double penalty_max() const noexcept { return penalty_max_; }

    /// Dense kernel. |X| x |S| doubles, so only for oracles and tests.
    std::shared_ptr<TabularMdp> tabular() const;
    /// Exact Q* by value iteration on the structured kernel, within `tol`.
    QFunction optimal_q(double tol = 1e-10) const;
    /// Bellman image on the structured kernel.
    QFunction bellman(const QFunction& q) const;

    /// Scheme "af": price and mismatch chains on their own, SoC driven by
    /// (mismatch, SoC, action). Reward over the full scope.
    static FactorizationScheme factored_scheme();
    /// SoC driven by (SoC, action) only, with the mismatch pinned to the
    /// anchor. Not exact.
    static FactorizationScheme soc_action_scheme();

    static FactoredSpace space_for(const WindFarmSpec& spec);

private:
    WindFarmSpec spec_;
    FactoredSpace space_;
    std::vector<double> price_cum_;
    std::vector<double> mismatch_cum_;
    std::vector<std::size_t> next_soc_;
    std::vector<double> penalty_;
    std::vector<double> reward_;
    double penalty_max_ = 0.0;
};

struct PolicyEvaluation {
    double mean_penalty = 0.0;
    double std_error = 0.0;
};

/// Mean cumulative penalty over `episodes` rollouts of `horizon` steps.
/// Episodes start from uniform price and mismatch bins with SoC at C/2;
/// episode e uses stream derive_seed(seed, {e}) for every policy (common
/// random numbers).
PolicyEvaluation evaluate_policy(const WindStorageEnv& env, const Policy& policy, std::size_t horizon,
                                 std::size_t episodes, std::uint64_t seed);

}  // namespace afmdp
