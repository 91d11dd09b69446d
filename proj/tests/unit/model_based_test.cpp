#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "afmdp/errors.hpp"
#include "afmdp/model_based.hpp"
#include "afmdp/stats.hpp"
#include "afmdp/synthetic.hpp"
#include "oracles.hpp"

namespace afmdp {
namespace {

// Two substates moving deterministically: s0' = (s0 + a) mod 3, s1' = s1 xor a.
std::shared_ptr<const TabularMdp> deterministic_mdp() {
    FactoredSpace sp({3, 2}, {2});
    DenseMatrix k(sp.num_pairs(), sp.num_states());
    std::vector<double> r(sp.num_pairs());
    for (std::size_t x = 0; x < sp.num_pairs(); ++x) {
        const std::size_t a = sp.digit(x, 2);
        const std::size_t s0 = (sp.digit(x, 0) + a) % 3;
        const std::size_t s1 = sp.digit(x, 1) ^ a;
        k(x, s0 + 3 * s1) = 1.0;
        r[x] = 0.4 * static_cast<double>(sp.digit(x, 0) == 2) + 0.3 * static_cast<double>(sp.digit(x, 1));
    }
    return std::make_shared<TabularMdp>(sp, k, r, 0.8);
}

TEST(Mbqvi, DeterministicEnvironmentLeavesOnlyTruncation) {
    const auto mdp = deterministic_mdp();
    const TabularGenerativeModel env(mdp);
    MbqviConfig cfg;
    cfg.scheme = make_scheme({{0}, {1}}, {{0, 2}, {1, 2}}, {{0}, {1}});
    cfg.replicates = 1;
    cfg.iterations = 60;
    cfg.seed = 4;
    const auto res = mbqvi(env, cfg);
    const auto q_star = exact_value_iteration(*mdp, 1e-13);
    EXPECT_LE(q_error(res.q, q_star), std::pow(0.8, 60) / 0.2 + 1e-12);
    EXPECT_EQ(res.diagnostics.residuals.size(), 60u);
    EXPECT_EQ(res.diagnostics.n_entry, 10u);
    EXPECT_EQ(res.diagnostics.total_samples, 10u + res.diagnostics.reward_queries);
}

TEST(Mbqvi, TrivialSchemeEqualsDirectVanillaPipeline) {
    const auto mdp = std::make_shared<TabularMdp>(testing::random_mdp(21, {3, 2}, {2}));
    const TabularGenerativeModel env(mdp);
    const auto& sp = mdp->space();
    const std::size_t n = 13, iters = 25;
    const std::uint64_t seed = 555;

    MbqviConfig cfg;
    cfg.scheme = trivial_scheme(sp);
    cfg.replicates = n;
    cfg.iterations = iters;
    cfg.seed = seed;
    const auto res = mbqvi(env, cfg);

    // Vanilla: every pair sampled n times from its own stream, counted and
    // normalized, with rewards read directly.
    DenseMatrix kernel(sp.num_pairs(), sp.num_states());
    for (std::size_t x = 0; x < sp.num_pairs(); ++x) {
        for (std::size_t r = 0; r < n; ++r) {
            RandomStream rng(derive_seed(seed, {0, x, r}));
            kernel(x, env.sample_next(x, rng)) += 1.0;
        }
        for (double& p : kernel.row(x)) p *= 1.0 / static_cast<double>(n);
    }
    QFunction q(sp.num_pairs());
    for (std::size_t t = 0; t < iters; ++t) q = bellman_apply(q, kernel, mdp->reward(), mdp->gamma(), sp);
    EXPECT_EQ(res.q, q);
    EXPECT_EQ(res.diagnostics.n_entry, sp.num_pairs());
    EXPECT_EQ(res.diagnostics.total_samples, n * sp.num_pairs() + sp.num_pairs());
}

TEST(Mbqvi, OracleRewardSwitch) {
    SyntheticSpec spec;
    spec.seed = 3;
    spec.sub_size = 3;
    spec.action_size = 2;
    spec.coupling = 0.3;
    spec.n_sub = 4;
    const auto inst = gen_imperfect_mdp(spec);
    const auto env = inst.environment();
    MbqviConfig cfg;
    cfg.scheme = inst.scheme("K4");
    cfg.replicates = 5;
    cfg.iterations = 3;
    cfg.oracle_reward = true;
    const auto res = mbqvi(env, cfg);
    EXPECT_EQ(res.diagnostics.reward_queries, 0u);
    const auto one = bellman_apply(QFunction(inst.mdp->space().num_pairs()), compose_kernel(res.model, env.space()),
                                   inst.mdp->reward(), inst.mdp->gamma(), env.space());
    EXPECT_GT(q_error(res.q, one), 0.0);
    EXPECT_THROW(
        [&] {
            auto bad = cfg;
            bad.replicates = 0;
            mbqvi(env, bad);
        }(),
        DomainError);
}

TEST(Mbqvi, ErrorShrinksWithReplicates) {
    SyntheticSpec spec;
    spec.seed = 11;
    const auto inst = gen_perfect_mdp(spec);
    const auto env = inst.environment();
    const auto q_star = exact_value_iteration(*inst.mdp, 1e-10);
    std::vector<double> medians, mads;
    for (std::size_t n : {100u, 400u, 1600u, 6400u}) {
        std::vector<double> errs;
        for (std::uint64_t trial = 0; trial < 30; ++trial) {
            MbqviConfig cfg;
            cfg.scheme = inst.scheme("af");
            cfg.replicates = n;
            cfg.iterations = 150;
            cfg.seed = derive_seed(99, {n, trial});
            errs.push_back(q_error(mbqvi(env, cfg).q, q_star));
        }
        const double med = median(errs);
        std::vector<double> dev;
        for (double e : errs) dev.push_back(std::abs(e - med));
        medians.push_back(med);
        mads.push_back(median(dev));
    }
    int inversions = 0;
    for (std::size_t i = 1; i < medians.size(); ++i) {
        if (medians[i] > medians[i - 1]) {
            ++inversions;
            EXPECT_LE(medians[i] - medians[i - 1], mads[i - 1]);
        }
    }
    EXPECT_LE(inversions, 1);
    EXPECT_LT(medians.back(), medians.front());
}

TEST(RequiredIterations, Arithmetic) {
    EXPECT_EQ(required_iterations(0.1, 0.9), 19u);
    EXPECT_EQ(required_iterations(0.1, 0.9, 4.0), static_cast<std::size_t>(std::ceil(4.0 * std::log(100.0))));
    EXPECT_EQ(required_iterations(0.99, 0.01, 1e-3), 1u);
    for (double eps : {0.5, 0.1, 0.01}) {
        const auto a = required_iterations(eps, 0.9);
        const auto b = required_iterations(eps / 2, 0.9);
        EXPECT_GE(b, a);
        EXPECT_LE(b - a, 3u);
    }
    EXPECT_THROW(required_iterations(0.0, 0.9), DomainError);
    EXPECT_THROW(required_iterations(1.0, 0.9), DomainError);
}

TEST(SampleBound, TrivialSchemeUsesFullPairCount) {
    FactoredSpace sp({4, 3}, {2});
    const auto b = sample_bound(trivial_scheme(sp), sp, 0.1, 0.05, 0.9);
    EXPECT_EQ(b.transition_cost, 24u);
    EXPECT_EQ(b.union_size, 24u);
    EXPECT_EQ(b.reward_cost, 24u);
    const double want = 576.0 * 24.0 * std::log(24.0 * 24.0 / 0.05) / (0.01 * 0.001);
    EXPECT_NEAR(b.transition_term, want, want * 1e-14);
    EXPECT_DOUBLE_EQ(b.total, b.transition_term + 24.0);
}

TEST(SampleBound, HalvingEpsQuadruplesTheFirstTerm) {
    SyntheticSpec spec;
    const auto inst = gen_perfect_mdp(spec);
    const auto& sp = inst.mdp->space();
    for (double eps : {0.2, 0.1, 0.05}) {
        const auto a = sample_bound(inst.scheme("af"), sp, eps, 0.05, 0.9);
        const auto b = sample_bound(inst.scheme("af"), sp, eps / 2, 0.05, 0.9);
        EXPECT_DOUBLE_EQ(b.transition_term / a.transition_term, 4.0);
        EXPECT_EQ(a.reward_term, b.reward_term);
    }
}

TEST(SampleBound, PerfectSchemeHandExpansion) {
    SyntheticSpec spec;
    const auto inst = gen_perfect_mdp(spec);
    const auto& sp = inst.mdp->space();
    const auto plan = plan_sampling(inst.scheme("af"), sp);
    // Scopes {0}, {1}, {2, 3} are disjoint: one group of cost max(5, 5, 25).
    ASSERT_EQ(plan.grouping.groups.size(), 1u);
    EXPECT_EQ(plan.grouping.total_cost(), 25u);
    const auto b = sample_bound(inst.scheme("af"), sp, plan.grouping, 0.1, 0.05, 0.9);
    EXPECT_EQ(b.union_size, 625u);
    EXPECT_EQ(b.reward_cost, 25u);
    const double first = 576.0 * 25.0 * std::log(24.0 * 625.0 / 0.05) / (0.1 * 0.1 * 0.1 * 0.1 * 0.1);
    EXPECT_NEAR(b.transition_term, first, first * 1e-14);
    EXPECT_THROW(sample_bound(inst.scheme("af"), sp, 0.1, 1.0, 0.9), DomainError);
    EXPECT_THROW(sample_bound(inst.scheme("af"), sp, 1.5, 0.1, 0.9), DomainError);
}

}  // namespace
}  // namespace afmdp
