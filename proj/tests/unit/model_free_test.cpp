#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <random>

#include "afmdp/errors.hpp"
#include "afmdp/model_free.hpp"
#include "afmdp/synthetic.hpp"
#include "oracles.hpp"

namespace afmdp {
namespace {

// s0' = (s0 + a) mod 3, s1' = (s1 + 1) mod 2.
std::shared_ptr<const TabularMdp> deterministic_mdp(double gamma = 0.8) {
    FactoredSpace sp({3, 2}, {2});
    DenseMatrix k(sp.num_pairs(), sp.num_states());
    std::vector<double> r(sp.num_pairs());
    for (std::size_t x = 0; x < sp.num_pairs(); ++x) {
        const std::size_t s0 = (sp.digit(x, 0) + sp.digit(x, 2)) % 3;
        const std::size_t s1 = (sp.digit(x, 1) + 1) % 2;
        k(x, s0 + 3 * s1) = 1.0;
        r[x] = 0.5 * static_cast<double>(sp.digit(x, 0) == 1) + 0.25 * static_cast<double>(sp.digit(x, 1));
    }
    return std::make_shared<TabularMdp>(sp, k, r, gamma);
}

FactorizationScheme deterministic_scheme() { return make_scheme({{0}, {1}}, {{0, 2}, {1}}, {{0}, {1}}); }

SyntheticInstance small_perfect(std::uint64_t seed) {
    SyntheticSpec spec;
    spec.seed = seed;
    spec.sub_size = 3;
    spec.action_size = 2;
    return gen_perfect_mdp(spec);
}

std::vector<double> estimated_reward(const GenerativeModel& env, const FactorizationScheme& scheme) {
    return compose_reward({scheme, {}, estimate_rewards(env, scheme).local}, env.space());
}

TEST(BellmanTable, DeterministicSuccessorsAndKeyCount) {
    const auto mdp = deterministic_mdp();
    const TabularGenerativeModel env(mdp);
    const auto scheme = deterministic_scheme();
    const auto plan = plan_sampling(scheme, mdp->space());
    const auto table = generate_bellman_table(env, scheme, plan, 1);
    ASSERT_EQ(table.entries.size(), 2u);
    EXPECT_EQ(table.entries[0].size(), 6u);
    EXPECT_EQ(table.entries[1].size(), 2u);
    for (std::size_t z = 0; z < 6; ++z) EXPECT_EQ(table.entries[0][z], (z % 3 + z / 3) % 3);
    for (std::size_t z = 0; z < 2; ++z) EXPECT_EQ(table.entries[1][z], (z + 1) % 2);
    EXPECT_EQ(table, generate_bellman_table(env, scheme, plan, 1));
}

TEST(BellmanTable, DisjointScopesHaveOneKeyPerValue) {
    FactoredSpace sp({2, 3}, {1});
    DenseMatrix k(6, 6, 1.0 / 6.0);
    const auto mdp = std::make_shared<TabularMdp>(sp, k, std::vector<double>(6, 0.5), 0.9);
    const TabularGenerativeModel env(mdp);
    const auto scheme = make_scheme({{0}, {1}}, {{0}, {1}}, {{0}});
    const auto plan = plan_sampling(scheme, sp);
    const auto table = generate_bellman_table(env, scheme, plan, 3);
    EXPECT_EQ(table.entries[0].size() + table.entries[1].size(), 5u);
    // The cycling entries 0 and 2 share the value 0 of the smaller scope: entry 0 wins.
    const auto batch = collect_samples(env, plan.sets, 1, 3);
    EXPECT_EQ(table.entries[0][0], sp.digit(batch.at(0, 0, 0), 0));
}

TEST(FactoredOperator, ZeroQGivesReward) {
    const auto inst = small_perfect(4);
    const auto env = inst.environment();
    const auto& scheme = inst.scheme("af");
    const auto plan = plan_sampling(scheme, env.space());
    const auto r = estimated_reward(env, scheme);
    const auto table = generate_bellman_table(env, scheme, plan, 8);
    const auto out = apply_factored_bellman(table, QFunction(env.space().num_pairs()), r, scheme, env.space(), 0.9);
    EXPECT_EQ(out.values(), r);
}

TEST(FactoredOperator, DeterministicEnvironmentGivesTrueBellman) {
    const auto mdp = deterministic_mdp();
    const TabularGenerativeModel env(mdp);
    const auto scheme = deterministic_scheme();
    const auto plan = plan_sampling(scheme, mdp->space());
    const FactoredBellmanOperator op(scheme, mdp->space(), mdp->reward(), mdp->gamma());
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(0.0, 5.0);
    QFunction q(mdp->space().num_pairs());
    for (double& v : q.values()) v = u(gen);
    const auto table = generate_bellman_table(env, scheme, plan, 17);
    const auto want = testing::brute_bellman(*mdp, q.values());
    EXPECT_LT(testing::sup_distance(op.apply(table, q).values(), want), 1e-12);
    const auto ref = reference_operator(env, scheme, plan, op, q, 7, 5);
    EXPECT_LT(testing::sup_distance(ref.values(), want), 1e-12);
}

TEST(FactoredOperator, FixedTableContraction) {
    const auto inst = small_perfect(6);
    const auto env = inst.environment();
    const auto& scheme = inst.scheme("af");
    const auto plan = plan_sampling(scheme, env.space());
    const FactoredBellmanOperator op(scheme, env.space(), estimated_reward(env, scheme), 0.9);
    const auto table = generate_bellman_table(env, scheme, plan, 21);
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> u(-3.0, 10.0);
    for (int rep = 0; rep < 50; ++rep) {
        QFunction a(env.space().num_pairs()), b(env.space().num_pairs());
        for (double& v : a.values()) v = u(gen);
        for (double& v : b.values()) v = u(gen);
        EXPECT_LE(q_error(op.apply(table, a), op.apply(table, b)), 0.9 * q_error(a, b) + 1e-12);
    }
}

TEST(FactoredOperator, MissingKeyIsACoverageError) {
    const auto mdp = deterministic_mdp();
    const auto scheme = deterministic_scheme();
    const FactoredBellmanOperator op(scheme, mdp->space(), mdp->reward(), mdp->gamma());
    OneShotSampleTable table{{std::vector<std::size_t>(6, 0), std::vector<std::size_t>{0}}};
    EXPECT_THROW(op.next_states(table), CoverageError);
    table.entries.pop_back();
    EXPECT_THROW(op.next_states(table), ShapeError);
}

TEST(FactoredOperator, UnbiasedForComposedModel) {
    const auto inst = small_perfect(8);
    const auto env = inst.environment();
    const auto& sp = env.space();
    ASSERT_LE(sp.num_pairs(), 64u);
    const auto& scheme = inst.scheme("af");
    const auto plan = plan_sampling(scheme, sp);
    const auto r = estimated_reward(env, scheme);
    const FactoredBellmanOperator op(scheme, sp, r, 0.9);
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    QFunction q(sp.num_pairs());
    for (double& v : q.values()) v = u(gen);

    const std::size_t reps = 10000;
    std::vector<double> sum(sp.num_pairs()), sum2(sp.num_pairs());
    for (std::size_t i = 0; i < reps; ++i) {
        const auto b = op.apply(generate_bellman_table(env, scheme, plan, derive_seed(404, {i})), q);
        for (std::size_t x = 0; x < b.size(); ++x) {
            sum[x] += b[x];
            sum2[x] += b[x] * b[x];
        }
    }
    const FactoredModel model{scheme, exact_marginals(*inst.mdp, scheme), {}};
    const auto exact = bellman_apply(q, compose_kernel(model, sp), r, 0.9, sp);
    // Bonferroni over all pairs: two-sided z for family-wise error 1e-3 across 54 means.
    const double z = 4.28;
    for (std::size_t x = 0; x < sp.num_pairs(); ++x) {
        const double mean = sum[x] / reps;
        const double sd = std::sqrt(std::max(0.0, sum2[x] / reps - mean * mean));
        EXPECT_NEAR(mean, exact[x], z * sd / std::sqrt(static_cast<double>(reps)) + 1e-12) << "pair " << x;
    }
}

TEST(ReferenceOperator, SingleTableAndVarianceShrink) {
    const auto inst = small_perfect(10);
    const auto env = inst.environment();
    const auto& sp = env.space();
    const auto& scheme = inst.scheme("af");
    const auto plan = plan_sampling(scheme, sp);
    const FactoredBellmanOperator op(scheme, sp, estimated_reward(env, scheme), 0.9);
    QFunction q(sp.num_pairs());
    for (std::size_t x = 0; x < q.size(); ++x) q[x] = static_cast<double>(x % 7);

    const auto one = reference_operator(env, scheme, plan, op, q, 1, 12);
    EXPECT_EQ(one, op.apply(generate_bellman_table(env, scheme, plan, derive_seed(12, {0})), q));
    EXPECT_THROW(reference_operator(env, scheme, plan, op, q, 0, 12), DomainError);

    auto mean_variance = [&](std::size_t count) {
        const std::size_t repeats = 200;
        std::vector<double> s(sp.num_pairs()), s2(sp.num_pairs());
        for (std::size_t rep = 0; rep < repeats; ++rep) {
            const auto h = reference_operator(env, scheme, plan, op, q, count, derive_seed(count, {rep}));
            for (std::size_t x = 0; x < h.size(); ++x) {
                s[x] += h[x];
                s2[x] += h[x] * h[x];
            }
        }
        double total = 0.0;
        for (std::size_t x = 0; x < s.size(); ++x) {
            const double m = s[x] / repeats;
            total += (s2[x] - repeats * m * m) / (repeats - 1);
        }
        return total / static_cast<double>(s.size());
    };
    const double ratio = mean_variance(100) * 100.0 / mean_variance(1);
    EXPECT_GE(ratio, 0.5);
    EXPECT_LE(ratio, 2.0);
}

TEST(LearningRate, Arithmetic) {
    EXPECT_NEAR(learning_rate(0, 0.9), 1.0 / 1.1, 1e-15);
    EXPECT_NEAR(learning_rate(9, 0.5), 1.0 / 6.0, 1e-15);
    for (std::size_t t : {0u, 10u, 1000u}) {
        EXPECT_EQ(learning_rate(t, 1.0), 1.0);
        const double eta = learning_rate(t, 0.3);
        EXPECT_GT(eta, 0.0);
        EXPECT_LE(eta, 1.0);
    }
    EXPECT_THROW(learning_rate(0, 0.0), DomainError);
}

TEST(EpochSchedule, HandExpandedValues) {
    FactoredSpace sp({5, 5, 5}, {5});
    const auto scheme = make_scheme({{0}, {1}, {2}}, {{0}, {1}, {2, 3}}, {{0}});
    ASSERT_EQ(union_input_size(scheme, sp), 625u);
    const auto s = epoch_schedule(0.1, 0.05, 0.9, scheme, sp);
    EXPECT_EQ(s.epochs, 5u);
    EXPECT_EQ(s.inner, 15138u);
    EXPECT_EQ(s.reference_sizes, (std::vector<std::size_t>{3936, 15743, 62970, 251878, 1007509}));
    EXPECT_EQ(s.reference_size(2), 15743u);
}

TEST(EpochSchedule, BoundaryAndGrowth) {
    FactoredSpace sp({4, 4}, {2});
    const auto scheme = trivial_scheme(sp);
    EXPECT_EQ(epoch_schedule(10.0, 0.05, 0.9, scheme, sp).epochs, 1u);
    const auto s = epoch_schedule(0.001, 0.05, 0.9, scheme, sp, {1.0, 0.5, 0.01});
    for (std::size_t tau = 1; tau < s.epochs; ++tau) {
        const double n = static_cast<double>(s.reference_size(tau));
        const double ratio = static_cast<double>(s.reference_size(tau + 1)) / n;
        EXPECT_GE(ratio, 4.0 * (1.0 - 1.0 / n));
        EXPECT_LE(ratio, 4.0 * (1.0 + 1.0 / n));
    }
    EXPECT_THROW(epoch_schedule(0.1, 1.5, 0.9, scheme, sp), DomainError);
    EXPECT_THROW(epoch_schedule(0.1, 0.05, 1.0, scheme, sp), DomainError);
    EXPECT_THROW(epoch_schedule(-1.0, 0.05, 0.9, scheme, sp), DomainError);
}

TEST(Vrql, ZeroRewardsStayZero) {
    FactoredSpace sp({2, 2}, {2});
    std::mt19937_64 gen(1);
    const auto mdp = std::make_shared<TabularMdp>(sp, testing::random_stochastic(8, 4, gen), std::vector<double>(8, 0.0), 0.9);
    const TabularGenerativeModel env(mdp);
    VrqlConfig cfg;
    cfg.scheme = testing::singleton_scheme(sp);
    cfg.epochs = 2;
    cfg.inner = 20;
    cfg.reference_sizes = {3, 12};
    const auto res = vrql_af(env, cfg);
    for (double v : res.q.values()) EXPECT_EQ(v, 0.0);
}

TEST(Vrql, FirstEpochIsStandardQLearning) {
    const auto inst = small_perfect(12);
    const auto env = inst.environment();
    const auto& sp = env.space();
    const auto& scheme = inst.scheme("af");
    const std::uint64_t seed = 31337;

    std::vector<QFunction> iterates;
    VrqlConfig cfg;
    cfg.scheme = scheme;
    cfg.epochs = 1;
    cfg.inner = 200;
    cfg.reference_sizes = {5};
    cfg.seed = seed;
    cfg.on_inner_step = [&](std::size_t, std::size_t, const QFunction& q) { iterates.push_back(q); };
    vrql_af(env, cfg);

    const auto plan = plan_sampling(scheme, sp);
    const FactoredBellmanOperator op(scheme, sp, estimated_reward(env, scheme), env.discount());
    QFunction q(sp.num_pairs());
    ASSERT_EQ(iterates.size(), cfg.inner);
    for (std::size_t t = 0; t < cfg.inner; ++t) {
        const auto h = op.apply(generate_bellman_table(env, scheme, plan, vrql_table_seed(seed, 1, TableRole::inner, t)), q);
        const double eta = learning_rate(t, env.discount());
        for (std::size_t x = 0; x < q.size(); ++x) q[x] += eta * (h[x] - q[x]);
        ASSERT_EQ(iterates[t], q) << "step " << t;
    }
}

TEST(Vrql, DeterministicEnvironmentConverges) {
    const auto mdp = deterministic_mdp(0.8);
    const TabularGenerativeModel env(mdp);
    VrqlConfig cfg;
    cfg.scheme = deterministic_scheme();
    cfg.epochs = 3;
    cfg.inner = 2000;
    cfg.reference_sizes = {4, 16, 64};
    cfg.seed = 8;
    cfg.oracle_q = exact_value_iteration(*mdp, 1e-12);
    const auto res = vrql_af(env, cfg);
    EXPECT_LE(q_error(res.q, *cfg.oracle_q), 0.05 / (1.0 - 0.8));
    ASSERT_EQ(res.diagnostics.epochs.size(), 3u);
    EXPECT_EQ(res.diagnostics.epochs.back().samples_cumulative,
              vrql_sample_count(res.diagnostics.n_entry, res.diagnostics.reward_queries, 2000, {4, 16, 64}));
}

TEST(Vrql, IteratesStayInEnvelopeAndRunsAreReproducible) {
    const auto inst = small_perfect(14);
    const auto env = inst.environment();
    VrqlConfig cfg;
    cfg.scheme = inst.scheme("af");
    cfg.epochs = 3;
    cfg.inner = 300;
    cfg.reference_sizes = {2, 8, 32};
    cfg.seed = 5;
    const auto a = vrql_af(env, cfg);
    EXPECT_GE(a.diagnostics.min_value, -10.0);
    EXPECT_LE(a.diagnostics.max_value, 20.0);
    EXPECT_EQ(a.q, vrql_af(env, cfg).q);
    cfg.seed = 6;
    EXPECT_NE(a.q, vrql_af(env, cfg).q);
    EXPECT_TRUE(std::isnan(a.diagnostics.epochs[0].q_error));
}

TEST(Vrql, ConfigurationChecks) {
    const auto mdp = deterministic_mdp();
    const TabularGenerativeModel env(mdp);
    VrqlConfig cfg;
    cfg.scheme = deterministic_scheme();
    cfg.epochs = 2;
    cfg.reference_sizes = {1};
    EXPECT_THROW(vrql_af(env, cfg), ShapeError);
    cfg.reference_sizes = {1, 0};
    EXPECT_THROW(vrql_af(env, cfg), DomainError);
    cfg.epochs = 0;
    EXPECT_THROW(vrql_af(env, cfg), DomainError);
}

TEST(Vrql, SampleCount) {
    EXPECT_EQ(vrql_sample_count(25, 30, 100, {10, 40}), 30u + (110u + 140u) * 25u);
}

}  // namespace
}  // namespace afmdp
