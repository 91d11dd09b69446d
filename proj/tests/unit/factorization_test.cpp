#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "afmdp/errors.hpp"
#include "afmdp/factorization.hpp"
#include "afmdp/synthetic.hpp"
#include "oracles.hpp"

namespace afmdp {
namespace {

using testing::flip_mdp;
using testing::singleton_scheme;

bool has_message(const std::vector<std::string>& v, const std::string& needle) {
    return std::any_of(v.begin(), v.end(), [&](const std::string& m) { return m.find(needle) != std::string::npos; });
}

TEST(ValidateScheme, TrivialSchemeIsValid) {
    FactoredSpace sp({3, 4}, {2});
    EXPECT_TRUE(validate_scheme(trivial_scheme(sp), sp).empty());
}

TEST(ValidateScheme, ReportsPartitionViolations) {
    FactoredSpace sp({2, 2}, {2});
    const auto repeated = make_scheme({{0}, {0, 1}}, {{0}, {1}}, {{0}});
    EXPECT_TRUE(has_message(validate_scheme(repeated, sp), "not a partition: index 0 repeated"));
    const auto uncovered = make_scheme({{0}}, {{0}}, {{0}});
    EXPECT_TRUE(has_message(validate_scheme(uncovered, sp), "not a partition: index 1 uncovered"));
}

TEST(ValidateScheme, ReportsRangeEmptinessAndAnchor) {
    FactoredSpace sp({2, 2}, {2});
    auto s = make_scheme({{0}, {1}}, {{0, 5}, {}}, {{7}}, 99);
    const auto v = validate_scheme(s, sp);
    EXPECT_TRUE(has_message(v, "input scope 0: index 5 out of range"));
    EXPECT_TRUE(has_message(v, "input scope 1 is empty"));
    EXPECT_TRUE(has_message(v, "reward scope 0: index 7 out of range"));
    EXPECT_TRUE(has_message(v, "x_default 99 out of range"));
    EXPECT_THROW(require_valid(s, sp), ValidationError);
}

TEST(ExactMarginal, FlipExample) {
    const auto mdp = flip_mdp(0.2, 0.7);
    const auto scheme = make_scheme({{0}, {1}}, {{0}, {1}}, {{0}});
    const auto m = exact_marginals(mdp, scheme);
    ASSERT_EQ(m.size(), 2u);
    const double want0[2][2] = {{0.8, 0.2}, {0.2, 0.8}};
    const double want1[2][2] = {{0.3, 0.7}, {0.7, 0.3}};
    for (int r = 0; r < 2; ++r) {
        for (int c = 0; c < 2; ++c) {
            EXPECT_NEAR(m[0].table(r, c), want0[r][c], 1e-12);
            EXPECT_NEAR(m[1].table(r, c), want1[r][c], 1e-12);
        }
    }
}

TEST(ExactMarginal, AnchorIndependentUnderPerfectFactorization) {
    const auto mdp = flip_mdp(0.2, 0.7);
    for (std::size_t anchor = 0; anchor < mdp.space().num_pairs(); ++anchor) {
        const auto a = exact_marginals(mdp, make_scheme({{0}, {1}}, {{0}, {1}}, {{0}}, 0));
        const auto b = exact_marginals(mdp, make_scheme({{0}, {1}}, {{0}, {1}}, {{0}}, anchor));
        for (std::size_t k = 0; k < 2; ++k) {
            for (std::size_t i = 0; i < a[k].table.data().size(); ++i) {
                EXPECT_NEAR(a[k].table.data()[i], b[k].table.data()[i], 1e-12);
            }
        }
    }
}

TEST(ExactMarginal, TrivialSchemeIsTheKernel) {
    const auto mdp = testing::random_mdp(5, {2, 3}, {2});
    const auto m = exact_marginal(mdp, trivial_scheme(mdp.space()), 0);
    ASSERT_EQ(m.table.rows(), mdp.kernel().rows());
    for (std::size_t i = 0; i < m.table.data().size(); ++i) {
        EXPECT_NEAR(m.table.data()[i], mdp.kernel().data()[i], 1e-15);
    }
}

TEST(ComposeKernel, ProductRule) {
    const auto mdp = flip_mdp(0.2, 0.7);
    const auto scheme = make_scheme({{0}, {1}}, {{0}, {1}}, {{0}});
    const FactoredModel model{scheme, exact_marginals(mdp, scheme), {}};
    const auto p = compose_kernel(model, mdp.space());
    // From s = (0, 0) both substates flip with their own probabilities.
    EXPECT_NEAR(p(0, 3), 0.2 * 0.7, 1e-12);
    for (std::size_t i = 0; i < p.data().size(); ++i) EXPECT_NEAR(p.data()[i], mdp.kernel().data()[i], 1e-12);
}

TEST(ComposeKernel, SingleComponentVerbatim) {
    const auto mdp = testing::random_mdp(8, {3}, {2});
    const auto scheme = trivial_scheme(mdp.space());
    const FactoredModel model{scheme, exact_marginals(mdp, scheme), {}};
    EXPECT_EQ(compose_kernel(model, mdp.space()), mdp.kernel());
}

TEST(ComposeKernel, RowsStayStochasticForArbitraryMarginals) {
    FactoredSpace sp({2, 3, 2}, {2});
    std::mt19937_64 gen(31);
    const auto scheme = make_scheme({{0}, {1, 2}}, {{0, 3}, {1, 2}}, {{0}});
    FactoredModel model{scheme, {}, {}};
    model.marginals.push_back({0, testing::random_stochastic(4, 2, gen)});
    model.marginals.push_back({1, testing::random_stochastic(6, 6, gen)});
    const auto p = compose_kernel(model, sp);
    EXPECT_LT(check_stochastic(p).max_row_error, 1e-12);

    model.marginals[1].table = DenseMatrix(5, 6, 1.0 / 6.0);
    EXPECT_THROW(compose_kernel(model, sp), ShapeError);
}

TEST(ComposeReward, Examples) {
    FactoredSpace sp({2, 2}, {2});
    const auto full = trivial_scheme(sp);
    std::vector<double> r1(8);
    for (std::size_t i = 0; i < 8; ++i) r1[i] = 0.1 * static_cast<double>(i);
    EXPECT_EQ(compose_reward({full, {}, {r1}}, sp), r1);

    const auto two = make_scheme({{0, 1}}, {{0, 1, 2}}, {{0}, {1}});
    const auto r = compose_reward({two, {}, {{0.25, 0.25}, {0.25, 0.25}}}, sp);
    for (double v : r) EXPECT_DOUBLE_EQ(v, 0.5);
    EXPECT_THROW(compose_reward({two, {}, {{0.25, 0.25}}}, sp), ShapeError);
}

// r(x) = g1(x[0, 2]) + g2(x[1]) with seeded tables.
TabularMdp additive_reward_mdp(std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    FactoredSpace sp({3, 4}, {2});
    std::uniform_real_distribution<double> u(0.0, 0.5);
    std::vector<double> g1(6), g2(4);
    for (double& v : g1) v = u(gen);
    for (double& v : g2) v = u(gen);
    std::vector<double> r(sp.num_pairs());
    for (std::size_t x = 0; x < r.size(); ++x) r[x] = g1[sp.digit(x, 0) + 3 * sp.digit(x, 2)] + g2[sp.digit(x, 1)];
    return TabularMdp(sp, testing::random_stochastic(sp.num_pairs(), sp.num_states(), gen), r, 0.9);
}

TEST(BestLocalRewards, ReconstructsAdditiveRewards) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto mdp = additive_reward_mdp(seed);
        for (std::size_t anchor : {0u, 7u, 23u}) {
            const auto scheme = make_scheme({{0, 1}}, {{0, 1, 2}}, {{0, 2}, {1}}, anchor);
            const auto local = best_local_rewards(mdp, scheme);
            const auto r = compose_reward({scheme, {}, local}, mdp.space());
            for (std::size_t x = 0; x < r.size(); ++x) EXPECT_NEAR(r[x], mdp.reward()[x], 1e-12);
            EXPECT_LT(reward_approx_error(mdp, scheme, local), 1e-12);
        }
    }
}

TEST(BestLocalRewards, SingleScopeAndConstant) {
    const auto mdp = testing::random_mdp(2, {3}, {2});
    const auto full = trivial_scheme(mdp.space());
    EXPECT_EQ(best_local_rewards(mdp, full)[0], mdp.reward());
    EXPECT_EQ(reward_approx_error(mdp, full, best_local_rewards(mdp, full)), 0.0);

    const TabularMdp constant(FactoredSpace({2}, {2}), DenseMatrix(4, 2, 0.5), std::vector<double>(4, 0.6), 0.9);
    const auto local = best_local_rewards(constant, make_scheme({{0}}, {{0, 1}}, {{0}, {1}}));
    for (const auto& li : local) {
        for (double v : li) EXPECT_DOUBLE_EQ(v, 0.3);
    }
}

TEST(RewardApproxError, MatchesScan) {
    const auto mdp = testing::random_mdp(12, {2, 2}, {2});
    const auto scheme = make_scheme({{0, 1}}, {{0, 1, 2}}, {{0}, {1, 2}});
    const auto local = best_local_rewards(mdp, scheme);
    double want = 0.0;
    for (std::size_t x = 0; x < mdp.space().num_pairs(); ++x) {
        const double approx = local[0][mdp.space().digit(x, 0)] +
                              local[1][mdp.space().digit(x, 1) + 2 * mdp.space().digit(x, 2)];
        want = std::max(want, std::abs(mdp.reward()[x] - approx));
    }
    EXPECT_GT(want, 0.0);
    EXPECT_DOUBLE_EQ(reward_approx_error(mdp, scheme, local), want);
}

// max over (x, s', one anchor per component) of |P - prod|, by brute force.
double vertex_oracle(const TabularMdp& mdp, const FactorizationScheme& scheme) {
    const auto& sp = mdp.space();
    const std::size_t K = scheme.transition.size();
    std::vector<std::size_t> pick(K, 0);
    double err = 0.0;
    for (std::size_t x = 0; x < sp.num_pairs(); ++x) {
        for (std::size_t s = 0; s < sp.num_states(); ++s) {
            std::fill(pick.begin(), pick.end(), 0);
            for (;;) {
                double prod = 1.0;
                for (std::size_t k = 0; k < K; ++k) {
                    // Pair agreeing with x on Z_k^P and with anchor pick[k] elsewhere.
                    std::size_t y = pick[k];
                    for (std::size_t d : scheme.transition.input_scopes[k]) {
                        y = y - sp.digit(y, d) * sp.stride(d) + sp.digit(x, d) * sp.stride(d);
                    }
                    double marg = 0.0;
                    for (std::size_t t = 0; t < sp.num_states(); ++t) {
                        bool agree = true;
                        for (std::size_t d : scheme.transition.state_scopes[k]) agree &= sp.digit(t, d) == sp.digit(s, d);
                        if (agree) marg += mdp.kernel()(y, t);
                    }
                    prod *= marg;
                }
                err = std::max(err, std::abs(mdp.kernel()(x, s) - prod));
                std::size_t k = 0;
                while (k < K && ++pick[k] == sp.num_pairs()) pick[k++] = 0;
                if (k == K) break;
            }
        }
    }
    return err;
}

TabularMdp coupled_mdp(std::uint64_t seed, double coupling) {
    const auto perfect = flip_mdp(0.2, 0.7);
    std::mt19937_64 gen(seed);
    const auto mix = testing::random_stochastic(8, 4, gen);
    DenseMatrix k(8, 4);
    for (std::size_t i = 0; i < k.data().size(); ++i) {
        k(i / 4, i % 4) = (1.0 - coupling) * perfect.kernel().data()[i] + coupling * mix.data()[i];
    }
    return TabularMdp(perfect.space(), k, perfect.reward(), 0.9);
}

TEST(TransitionApproxError, PerfectAndTrivialAreZero) {
    const auto mdp = flip_mdp(0.2, 0.7);
    const auto scheme = make_scheme({{0}, {1}}, {{0}, {1}}, {{0}});
    EXPECT_LT(transition_approx_error(mdp, scheme), 1e-12);
    EXPECT_LT(transition_approx_error(mdp, scheme, ApproxErrorMode::sup_vertices), 1e-12);
    const auto coupled = coupled_mdp(1, 0.5);
    EXPECT_EQ(transition_approx_error(coupled, trivial_scheme(coupled.space())), 0.0);
}

TEST(TransitionApproxError, SupVerticesMatchesEnumeration) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto mdp = coupled_mdp(seed, 0.1);
        for (const auto& scheme : {make_scheme({{0}, {1}}, {{0}, {1}}, {{0}}),
                                   make_scheme({{0}, {1}}, {{0, 2}, {1}}, {{0}}, 5)}) {
            const double sup = transition_approx_error(mdp, scheme, ApproxErrorMode::sup_vertices);
            const double anchored = transition_approx_error(mdp, scheme);
            EXPECT_NEAR(sup, vertex_oracle(mdp, scheme), 1e-12);
            EXPECT_GE(sup + 1e-15, anchored);
            EXPECT_GT(anchored, 0.0);
        }
    }
}

TEST(TransitionApproxError, GuardRaisesCapacityError) {
    SyntheticSpec spec;
    spec.seed = 1;
    spec.n_sub = 4;
    spec.action_size = 2;
    spec.coupling = 0.1;
    const auto inst = gen_imperfect_mdp(spec);
    EXPECT_THROW(transition_approx_error(*inst.mdp, inst.scheme("K4"), ApproxErrorMode::sup_vertices), CapacityError);
}

TEST(MisspecificationBias, Arithmetic) {
    EXPECT_EQ(misspecification_bias(0.0, 0.0, 0.9), 0.0);
    EXPECT_NEAR(misspecification_bias(0.01, 0.0, 0.9), 0.9, 1e-12);
    EXPECT_NEAR(misspecification_bias(0.0, 0.1, 0.5), 0.2, 1e-12);
    EXPECT_THROW(misspecification_bias(0.1, 0.1, 1.0), DomainError);
    EXPECT_THROW(misspecification_bias(0.1, 0.1, 0.0), DomainError);
}

TEST(MisspecificationBias, Monotone) {
    double prev = 0.0;
    for (double g : {0.1, 0.3, 0.5, 0.7, 0.9, 0.99}) {
        const double e = misspecification_bias(0.01, 0.02, g);
        EXPECT_GE(e, prev);
        prev = e;
        EXPECT_LE(misspecification_bias(0.01, 0.02, g), misspecification_bias(0.02, 0.02, g));
        EXPECT_LE(misspecification_bias(0.01, 0.02, g), misspecification_bias(0.01, 0.03, g));
    }
}

}  // namespace
}  // namespace afmdp
