#include <gtest/gtest.h>

#include <vector>

#include "afmdp/errors.hpp"
#include "afmdp/space.hpp"

namespace afmdp {
namespace {

TEST(FactoredSpace, FlatIndexExamples) {
    FactoredSpace sp({5, 5, 5}, {5});
    EXPECT_EQ(sp.flat_index(std::vector<std::size_t>{0, 0, 0, 0}), 0u);
    EXPECT_EQ(sp.flat_index(std::vector<std::size_t>{1, 0, 0, 0}), 1u);
    EXPECT_EQ(sp.flat_index(std::vector<std::size_t>{4, 4, 4, 4}), 624u);
}

TEST(FactoredSpace, PairIsStatePlusStatesTimesAction) {
    FactoredSpace sp({3, 2}, {2, 3});
    for (std::size_t s = 0; s < sp.num_states(); ++s) {
        for (std::size_t a = 0; a < sp.num_actions(); ++a) {
            const std::size_t x = sp.pair(s, a);
            EXPECT_EQ(x, s + 6 * a);
            EXPECT_EQ(sp.state_of(x), s);
            EXPECT_EQ(sp.action_of(x), a);
        }
    }
}

TEST(FactoredSpace, CodecIsBijectiveOnSmallSpaces) {
    for (std::size_t a = 1; a <= 4; ++a) {
        for (std::size_t b = 1; b <= 4; ++b) {
            for (std::size_t c = 1; c <= 3; ++c) {
                FactoredSpace sp({a, b}, {c});
                std::vector<bool> seen(sp.num_pairs(), false);
                for (std::size_t x = 0; x < sp.num_pairs(); ++x) {
                    const auto coords = sp.unflat_index(x);
                    ASSERT_EQ(coords.size(), 3u);
                    for (std::size_t d = 0; d < 3; ++d) EXPECT_EQ(coords[d], sp.digit(x, d));
                    const std::size_t back = sp.flat_index(coords);
                    ASSERT_EQ(back, x);
                    seen[back] = true;
                }
                for (bool s : seen) EXPECT_TRUE(s);
            }
        }
    }
}

TEST(FactoredSpace, RejectsBadShapes) {
    EXPECT_THROW(FactoredSpace({}, {2}), DomainError);
    EXPECT_THROW(FactoredSpace({2}, {}), DomainError);
    EXPECT_THROW(FactoredSpace({2, 0}, {2}), DomainError);
    EXPECT_THROW(FactoredSpace({1u << 31, 1u << 31, 1u << 31}, {1u << 31}), DomainError);
}

TEST(FactoredSpace, OutOfRangeCoordinateNamesDimension) {
    FactoredSpace sp({5, 5}, {3});
    try {
        sp.flat_index(std::vector<std::size_t>{0, 0, 3});
        FAIL() << "expected IndexError";
    } catch (const IndexError& e) {
        EXPECT_NE(std::string(e.what()).find("dimension 2"), std::string::npos) << e.what();
    }
    EXPECT_THROW(sp.unflat_index(sp.num_pairs()), IndexError);
    EXPECT_THROW(sp.flat_index(std::vector<std::size_t>{0, 0}), ShapeError);
}

TEST(Scope, SetHelpers) {
    EXPECT_EQ(normalize_scope({3, 1, 3, 0}), (Scope{0, 1, 3}));
    EXPECT_TRUE(is_subset({1}, {0, 1}));
    EXPECT_FALSE(is_subset({2}, {0, 1}));
    EXPECT_TRUE(is_subset({}, {0}));
    EXPECT_TRUE(intersects({0, 2}, {2, 3}));
    EXPECT_FALSE(intersects({0, 1}, {2, 3}));
    EXPECT_EQ(scope_union({0, 2}, {1, 2}), (Scope{0, 1, 2}));
    EXPECT_EQ(scope_complement({1, 3}, 5), (Scope{0, 2, 4}));
}

TEST(ScopeCodec, ProjectEmbedRoundTrip) {
    FactoredSpace sp({3, 4, 2}, {3});
    ScopeCodec codec(sp, {1, 3});
    EXPECT_EQ(codec.size(), 12u);
    for (std::size_t x = 0; x < sp.num_pairs(); ++x) {
        const std::size_t z = codec.project(x);
        EXPECT_EQ(z, sp.digit(x, 1) + 4 * sp.digit(x, 3));
        EXPECT_EQ(codec.embed(z, x), x);
        EXPECT_EQ(codec.embed(z, 0), codec.offset(z));
    }
    const auto table = codec.projection_table(sp.num_pairs());
    for (std::size_t x = 0; x < sp.num_pairs(); ++x) EXPECT_EQ(table[x], codec.project(x));
}

TEST(ScopeCodec, EmptyScopeHasOneValue) {
    FactoredSpace sp({3}, {2});
    ScopeCodec codec(sp, {});
    EXPECT_EQ(codec.size(), 1u);
    EXPECT_EQ(codec.project(5), 0u);
    EXPECT_THROW(ScopeCodec(sp, {2}), IndexError);
}

}  // namespace
}  // namespace afmdp
