#include "pcmlab/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace pcmlab;

TEST(StreamRng, DeterministicAcrossInstances) {
    StreamRng a(42, stream::kData, 7);
    StreamRng b(42, stream::kData, 7);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

// frozen first draws pin the generator across refactors; every training and
// evaluation result in the project is downstream of these
TEST(StreamRng, GoldenSequence) {
    StreamRng rng(1, 2, 3);
    EXPECT_EQ(rng.next_u64(), 6588988029983277238ULL);
    EXPECT_EQ(rng.next_u64(), 15925659190040627001ULL);
    EXPECT_EQ(rng.next_u64(), 1321962074176129191ULL);

    StreamRng d(1, 2, 3);
    EXPECT_DOUBLE_EQ(d.next_double(), 0.86333171460528924);
    EXPECT_DOUBLE_EQ(d.next_double(), 0.071663707638260132);

    StreamRng n(1, 2, 3);
    const Vec2 z = n.next_normal2();
    EXPECT_DOUBLE_EQ(z.x, 0.25198574973410898);
    EXPECT_DOUBLE_EQ(z.y, -0.29193430355522548);
}

TEST(StreamRng, StreamsAreIndependent) {
    // changing any coordinate of (seed, purpose, index) moves the stream
    const uint64_t base = StreamRng(5, stream::kInit, 0).next_u64();
    EXPECT_NE(base, StreamRng(6, stream::kInit, 0).next_u64());
    EXPECT_NE(base, StreamRng(5, stream::kData, 0).next_u64());
    EXPECT_NE(base, StreamRng(5, stream::kInit, 1).next_u64());
}

TEST(StreamRng, DoubleRange) {
    StreamRng rng(9, 1, 0);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.next_double();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
    }
    StreamRng r2(9, 1, 1);
    for (int i = 0; i < 1000; ++i) {
        const double u = r2.next_uniform(-2.0, 3.0);
        EXPECT_GE(u, -2.0);
        EXPECT_LT(u, 3.0);
    }
}

TEST(StreamRng, NextBelowUniform) {
    StreamRng rng(11, 4, 2);
    std::vector<int> counts(8, 0);
    const int n = 80000;
    for (int i = 0; i < n; ++i) {
        const uint64_t v = rng.next_below(8);
        ASSERT_LT(v, 8u);
        ++counts[static_cast<size_t>(v)];
    }
    for (int c : counts) EXPECT_NEAR(c, n / 8, n / 8 * 0.05);
}

TEST(StreamRng, NormalMoments) {
    StreamRng rng(13, 6, 0);
    const int n = 200000;
    double s1 = 0.0, s2 = 0.0, cross = 0.0;
    for (int i = 0; i < n; ++i) {
        const Vec2 z = rng.next_normal2();
        s1 += z.x + z.y;
        s2 += z.x * z.x + z.y * z.y;
        cross += z.x * z.y;
    }
    EXPECT_NEAR(s1 / (2.0 * n), 0.0, 0.01);
    EXPECT_NEAR(s2 / (2.0 * n), 1.0, 0.02);
    EXPECT_NEAR(cross / n, 0.0, 0.02); // Box-Muller pair is uncorrelated
}

TEST(StreamRng, NormalSpareCaching) {
    // next_normal() twice equals one next_normal2() pair
    StreamRng a(17, 2, 4);
    StreamRng b(17, 2, 4);
    const Vec2 pair = a.next_normal2();
    EXPECT_DOUBLE_EQ(b.next_normal(), pair.x);
    EXPECT_DOUBLE_EQ(b.next_normal(), pair.y);
}
