#include "afmdp/sampling.hpp"

#include <algorithm>

#include "afmdp/errors.hpp"

namespace afmdp {

double GenerativeModel::component_reward(std::size_t, std::size_t) const {
    throw DomainError("environment has no native reward decomposition");
}

TabularGenerativeModel::TabularGenerativeModel(std::shared_ptr<const TabularMdp> mdp) : mdp_(std::move(mdp)) {
    const auto& kernel = mdp_->kernel();
    cumulative_.resize(kernel.rows() * kernel.cols());
    for (std::size_t x = 0; x < kernel.rows(); ++x) {
        const auto row = kernel.row(x);
        double* cum = cumulative_.data() + x * kernel.cols();
        double acc = 0.0;
        std::size_t last_positive = 0;
        for (std::size_t s = 0; s < row.size(); ++s) {
            acc += row[s];
            cum[s] = acc;
            if (row[s] > 0.0) last_positive = s;
        }
        // Absorb rounding in the row sum: a draw past the final partial sum
        // lands on the last reachable state.
        for (std::size_t s = last_positive; s < row.size(); ++s) cum[s] = 2.0;
    }
}

TabularGenerativeModel::TabularGenerativeModel(std::shared_ptr<const TabularMdp> mdp, RewardScheme native,
                                               std::vector<std::vector<double>> local)
    : TabularGenerativeModel(std::move(mdp)) {
    if (native.size() != local.size()) throw ShapeError("native reward scopes and tables differ in count");
    for (std::size_t i = 0; i < native.size(); ++i) {
        if (ScopeCodec(mdp_->space(), native.scopes[i]).size() != local[i].size()) {
            throw ShapeError("native reward table " + std::to_string(i) + " has the wrong size");
        }
    }
    native_ = std::move(native);
    local_ = std::move(local);
}

std::size_t TabularGenerativeModel::sample_next(std::size_t pair, RandomStream& rng) const {
    const std::size_t cols = mdp_->kernel().cols();
    const double* begin = cumulative_.data() + pair * cols;
    const double u = rng.uniform();
    return static_cast<std::size_t>(std::upper_bound(begin, begin + cols, u) - begin);
}

double TabularGenerativeModel::component_reward(std::size_t i, std::size_t z) const {
    if (!native_) return GenerativeModel::component_reward(i, z);
    return local_.at(i).at(z);
}

std::size_t CountingGenerativeModel::sample_next(std::size_t pair, RandomStream& rng) const {
    transitions_.fetch_add(1, std::memory_order_relaxed);
    return inner_.sample_next(pair, rng);
}

double CountingGenerativeModel::reward(std::size_t pair) const {
    rewards_.fetch_add(1, std::memory_order_relaxed);
    return inner_.reward(pair);
}

double CountingGenerativeModel::component_reward(std::size_t i, std::size_t z) const {
    rewards_.fetch_add(1, std::memory_order_relaxed);
    return inner_.component_reward(i, z);
}

std::vector<JointSamplingSet> build_joint_sampling_sets(const GroupingPlan& plan, const FactorizationScheme& scheme,
                                                        const FactoredSpace& space) {
    std::vector<JointSamplingSet> sets;
    for (std::size_t g = 0; g < plan.groups.size(); ++g) {
        std::vector<ScopeCodec> codecs;
        for (std::size_t k : plan.groups[g]) codecs.emplace_back(space, scheme.transition.input_scopes.at(k));
        JointSamplingSet set{g, {}};
        set.pairs.reserve(plan.dmax[g]);
        for (std::size_t i = 0; i < plan.dmax[g]; ++i) {
            std::size_t x = scheme.x_default;
            for (const auto& codec : codecs) x = codec.embed(i % codec.size(), x);
            set.pairs.push_back(x);
        }
        sets.push_back(std::move(set));
    }
    return sets;
}

SamplingPlan plan_sampling(const FactorizationScheme& scheme, const FactoredSpace& space, ColoringMethod method) {
    require_valid(scheme, space);
    SamplingPlan plan;
    plan.reduction = reduce_inclusive(scheme);
    plan.graph = build_conflict_graph(scheme, plan.reduction, space);
    plan.grouping = color(plan.graph, method);
    plan.sets = build_joint_sampling_sets(plan.grouping, scheme, space);

    const std::size_t K = scheme.transition.size();
    std::vector<std::size_t> group_of_survivor(K, 0);
    for (std::size_t g = 0; g < plan.grouping.groups.size(); ++g) {
        for (std::size_t k : plan.grouping.groups[g]) group_of_survivor[k] = g;
    }
    plan.group_of.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        const auto& cover = plan.reduction.cover[k];
        plan.group_of[k] = group_of_survivor[cover ? *cover : k];
    }
    return plan;
}

SampleBatch collect_samples(const GenerativeModel& env, const std::vector<JointSamplingSet>& sets,
                            std::size_t replicates, std::uint64_t seed) {
    if (replicates == 0) throw DomainError("replicates per entry must be at least 1");
    SampleBatch batch;
    batch.replicates = replicates;
    batch.next_states.resize(sets.size());
    for (std::size_t g = 0; g < sets.size(); ++g) {
        const auto& pairs = sets[g].pairs;
        auto& out = batch.next_states[g];
        out.resize(pairs.size() * replicates);
        for (std::size_t e = 0; e < pairs.size(); ++e) {
            for (std::size_t r = 0; r < replicates; ++r) {
                RandomStream rng(derive_seed(seed, {g, e, r}));
                out[e * replicates + r] = env.sample_next(pairs[e], rng);
            }
        }
    }
    return batch;
}

std::vector<MarginalKernel> estimate_marginals(const SampleBatch& batch, const SamplingPlan& plan,
                                               const FactorizationScheme& scheme, const FactoredSpace& space) {
    const std::size_t K = scheme.transition.size();
    if (plan.group_of.size() != K) throw ShapeError("sampling plan does not match the scheme");
    std::vector<MarginalKernel> out;
    out.reserve(K);
    for (std::size_t k = 0; k < K; ++k) {
        const ScopeCodec input(space, scheme.transition.input_scopes[k]);
        const ScopeCodec state_codec(space, scheme.transition.state_scopes[k]);
        const std::size_t g = plan.group_of[k];
        const auto& pairs = plan.sets.at(g).pairs;
        const auto& draws = batch.next_states.at(g);
        if (draws.size() != pairs.size() * batch.replicates) throw ShapeError("batch does not match the sampling sets");

        DenseMatrix counts(input.size(), state_codec.size());
        std::vector<std::size_t> totals(input.size(), 0);
        for (std::size_t e = 0; e < pairs.size(); ++e) {
            const std::size_t z = input.project(pairs[e]);
            auto row = counts.row(z);
            for (std::size_t r = 0; r < batch.replicates; ++r) {
                row[state_codec.project(draws[e * batch.replicates + r])] += 1.0;
            }
            totals[z] += batch.replicates;
        }
        for (std::size_t z = 0; z < input.size(); ++z) {
            if (totals[z] == 0) {
                throw CoverageError("component " + std::to_string(k) + " has no samples for scope value " +
                                    std::to_string(z));
            }
            const double inv = 1.0 / static_cast<double>(totals[z]);
            for (double& c : counts.row(z)) c *= inv;
        }
        out.push_back({k, std::move(counts)});
    }
    return out;
}

RewardEstimate estimate_rewards(const GenerativeModel& env, const FactorizationScheme& scheme) {
    const auto& space = env.space();
    const auto& scopes = scheme.reward.scopes;
    RewardEstimate est;
    const RewardScheme* native = env.native_reward_scheme();
    if (native && native->scopes == scopes) {
        for (std::size_t i = 0; i < scopes.size(); ++i) {
            const ScopeCodec codec(space, scopes[i]);
            std::vector<double> local(codec.size());
            for (std::size_t z = 0; z < codec.size(); ++z) local[z] = env.component_reward(i, z);
            est.queries += codec.size();
            est.local.push_back(std::move(local));
        }
        return est;
    }

    const std::size_t L = scopes.size();
    double correction = 0.0;
    if (L > 1) {
        correction = static_cast<double>(L - 1) / static_cast<double>(L) * env.reward(scheme.x_default);
        ++est.queries;
    }
    for (const auto& scope : scopes) {
        const ScopeCodec codec(space, scope);
        std::vector<double> local(codec.size());
        for (std::size_t z = 0; z < codec.size(); ++z) {
            local[z] = env.reward(codec.embed(z, scheme.x_default)) - correction;
        }
        est.queries += codec.size();
        est.local.push_back(std::move(local));
    }
    return est;
}

SamplingCost sampling_cost(const GroupingPlan& plan, std::size_t replicates) {
    const std::size_t n_entry = plan.total_cost();
    return {n_entry, n_entry * replicates};
}

}  // namespace afmdp
