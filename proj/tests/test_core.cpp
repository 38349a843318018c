#include "levyldp/core.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace levyldp;

TEST(Seeds, DeriveSeedIsDeterministicAndPathSensitive) {
  EXPECT_EQ(derive_seed(7, {1, 2}), derive_seed(7, {1, 2}));
  EXPECT_NE(derive_seed(7, {1, 2}), derive_seed(7, {2, 1}));
  EXPECT_NE(derive_seed(7, {1}), derive_seed(8, {1}));
}

TEST(Rng, SplitDoesNotDependOnConsumption) {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) b.uniform();
  Rng ca = a.split(3), cb = b.split(3);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(ca.bits(), cb.bits());
}

TEST(Rng, UniformRangeAndMoments) {
  Rng r(1);
  const int n = 200000;
  double s = 0, s2 = 0;
  for (int i = 0; i < n; ++i) {
    double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    s += u;
    s2 += u * u;
  }
  // mean 1/2 with sd sqrt(1/12 / n)
  EXPECT_NEAR(s / n, 0.5, 5 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(s2 / n, 1.0 / 3, 5 * std::sqrt(4.0 / 45 / n));
}

TEST(Rng, NormalAndExponentialMoments) {
  Rng r(2);
  const int n = 200000;
  double s = 0, s2 = 0, e = 0;
  for (int i = 0; i < n; ++i) {
    double g = r.normal();
    s += g;
    s2 += g * g;
    e += r.exponential(2.0);
  }
  EXPECT_NEAR(s / n, 0.0, 5 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, 1.0, 5 * std::sqrt(2.0 / n));
  EXPECT_NEAR(e / n, 0.5, 5 * 0.5 / std::sqrt(n));
}

TEST(Statistics, MeanAndStderr) {
  std::vector<double> xs{1, 2, 3, 4};
  auto m = mean_and_stderr(xs);
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  // sample variance 5/3, stderr sqrt(5/12)
  EXPECT_NEAR(m.stderr_, std::sqrt(5.0 / 12.0), 1e-15);
  EXPECT_DOUBLE_EQ(median({3, 1, 2}), 2.0);
  EXPECT_DOUBLE_EQ(median({4, 1, 2, 3}), 2.5);
}

TEST(Statistics, WilsonInterval) {
  // 10 of 100 at z = 1.96: textbook value [0.0552, 0.1744]
  auto iv = wilson_interval(10, 100);
  EXPECT_NEAR(iv.lo, 0.05523, 1e-4);
  EXPECT_NEAR(iv.hi, 0.17437, 1e-4);
  auto z = wilson_interval(0, 50);
  EXPECT_EQ(z.lo, 0.0);
  EXPECT_GT(z.hi, 0.0);
}

TEST(Statistics, NormalQuantile) {
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-8);
  EXPECT_NEAR(normal_quantile(0.5), 0.0, 1e-12);
  EXPECT_NEAR(normal_quantile(1e-6), -4.753424308822899, 1e-7);
  EXPECT_THROW(normal_quantile(0.0), InvalidArgument);
}

TEST(Statistics, TwoProportionZ) {
  EXPECT_DOUBLE_EQ(two_proportion_z(10, 100, 10, 100), 0.0);
  // p1 = .3, p2 = .2, pooled .25: z = .1 / sqrt(.1875 * .02)
  EXPECT_NEAR(two_proportion_z(30, 100, 20, 100), 0.1 / std::sqrt(0.1875 * 0.02), 1e-12);
}

TEST(Statistics, BatchMeans) {
  BatchMeans bm(100, 10);
  for (int i = 0; i < 100; ++i) bm.add(i);
  ASSERT_EQ(bm.batch_means().size(), 10u);
  EXPECT_DOUBLE_EQ(bm.batch_means()[0], 4.5);
  EXPECT_DOUBLE_EQ(bm.estimate().mean, 49.5);
}
