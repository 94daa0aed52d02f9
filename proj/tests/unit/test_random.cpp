#include <gtest/gtest.h>

#include <set>

#include "flowplan/random.hpp"

using namespace flowplan;

TEST(Random, SameSeedSameStream) {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Random, DerivedSeedsDiffer) {
    std::set<std::uint64_t> seen;
    for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(derive_seed(7, {i}));
    seen.insert(derive_seed(7, {1, 2}));
    seen.insert(derive_seed(7, {2, 1}));
    EXPECT_EQ(seen.size(), 1002u);
    EXPECT_EQ(derive_seed(7, {3, 4}), derive_seed(7, {3, 4}));
}

TEST(Random, UniformAndNormalMoments) {
    Rng rng(1);
    const int n = 200000;
    double su = 0, sn = 0, sn2 = 0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        su += u;
        const double z = rng.normal();
        sn += z;
        sn2 += z * z;
    }
    EXPECT_NEAR(su / n, 0.5, 0.005);
    EXPECT_NEAR(sn / n, 0.0, 0.01);
    EXPECT_NEAR(sn2 / n, 1.0, 0.02);
}

TEST(Random, BelowStaysInRange) {
    Rng rng(3);
    std::vector<int> hist(7, 0);
    for (int i = 0; i < 70000; ++i) {
        const auto k = rng.below(7);
        ASSERT_LT(k, 7u);
        ++hist[k];
    }
    for (int h : hist) EXPECT_NEAR(h, 10000, 500);
}
