#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "afmdp/errors.hpp"
#include "afmdp/stats.hpp"

namespace afmdp {
namespace {

TEST(Quantile, HandValues) {
    EXPECT_DOUBLE_EQ(median({3.0, 1.0, 2.0}), 2.0);
    EXPECT_DOUBLE_EQ(median({4.0, 1.0, 3.0, 2.0}), 2.5);
    EXPECT_DOUBLE_EQ(quantile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.25), 2.0);
    EXPECT_DOUBLE_EQ(quantile({1.0, 2.0, 3.0, 4.0}, 0.25), 1.75);
    EXPECT_DOUBLE_EQ(quantile({7.0}, 0.9), 7.0);
    EXPECT_DOUBLE_EQ(quantile({5.0, 1.0}, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(quantile({5.0, 1.0}, 1.0), 5.0);
    EXPECT_THROW(quantile({}, 0.5), DomainError);
    EXPECT_THROW(quantile({1.0}, 1.5), DomainError);
}

// Type 7 quantile written from its definition on sorted data.
double type7(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double h = (static_cast<double>(v.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(h);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

TEST(Quantile, AgreesWithDefinition) {
    std::mt19937_64 gen(3);
    std::normal_distribution<double> dist;
    for (std::size_t n = 1; n < 40; ++n) {
        std::vector<double> v(n);
        for (double& x : v) x = dist(gen);
        for (double q : {0.0, 0.1, 0.25, 0.5, 0.75, 0.99, 1.0}) {
            EXPECT_NEAR(quantile(v, q), type7(v, q), 1e-15) << n << " " << q;
        }
    }
}

TEST(Summarize, Fields) {
    const auto s = summarize({1.0, 2.0, 3.0, 4.0, 5.0});
    EXPECT_EQ(s.count, 5u);
    EXPECT_DOUBLE_EQ(s.median, 3.0);
    EXPECT_DOUBLE_EQ(s.q1, 2.0);
    EXPECT_DOUBLE_EQ(s.q3, 4.0);
}

}  // namespace
}  // namespace afmdp
