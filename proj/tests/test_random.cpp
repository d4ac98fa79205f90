#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "ellspec/random.hpp"

using ellspec::RandomStream;
using ellspec::derive_seed;

TEST(RandomStream, SameSeedSameSequence) {
    RandomStream a(42), b(42);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(a.uniform(), b.uniform());
}

TEST(RandomStream, DerivedStreamsDiffer) {
    std::set<std::uint64_t> seeds;
    for (std::uint64_t i = 0; i < 50; ++i) {
        seeds.insert(derive_seed(7, "replication", i));
        seeds.insert(derive_seed(7, "groups", i));
    }
    EXPECT_EQ(seeds.size(), 100u);
    EXPECT_NE(derive_seed(1, "x", 0), derive_seed(2, "x", 0));
}

TEST(RandomStream, UniformRange) {
    RandomStream rng(1);
    double sum = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    EXPECT_NEAR(sum / 100000, 0.5, 0.005);
}

TEST(RandomStream, NormalMoments) {
    RandomStream rng(2);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sum2 += z * z;
        sum4 += z * z * z * z;
    }
    EXPECT_NEAR(sum / n, 0.0, 0.01);
    EXPECT_NEAR(sum2 / n, 1.0, 0.02);
    EXPECT_NEAR(sum4 / n, 3.0, 0.1);
}

TEST(RandomStream, GammaMoments) {
    RandomStream rng(3);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = rng.gamma(3.0, 2.0);
        sum += g;
        sum2 += g * g;
    }
    const double mean = sum / n;
    EXPECT_NEAR(mean, 6.0, 0.05);                      // shape*scale
    EXPECT_NEAR(sum2 / n - mean * mean, 12.0, 0.4);    // shape*scale^2
}

TEST(RandomStream, GammaSmallShape) {
    RandomStream rng(4);
    const int n = 200000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rng.gamma(0.4, 1.0);
    EXPECT_NEAR(sum / n, 0.4, 0.01);
}

TEST(RandomStream, BetaMean) {
    RandomStream rng(5);
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rng.beta(2.0, 3.0);
    EXPECT_NEAR(sum / n, 0.4, 0.01);
}

TEST(RandomStream, ChiSquareMean) {
    RandomStream rng(6);
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += rng.chi_square(7.0);
    EXPECT_NEAR(sum / n, 7.0, 0.1);
}

TEST(RandomStream, UniformIndexBounds) {
    RandomStream rng(7);
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) {
        const auto k = rng.uniform_index(5);
        ASSERT_LT(k, 5u);
        seen.insert(k);
    }
    EXPECT_EQ(seen.size(), 5u);
    EXPECT_THROW(rng.uniform_index(0), std::domain_error);
}

TEST(RandomStream, InvalidGammaParameters) {
    RandomStream rng(8);
    EXPECT_THROW(rng.gamma(0.0, 1.0), std::domain_error);
    EXPECT_THROW(rng.gamma(1.0, -1.0), std::domain_error);
}
