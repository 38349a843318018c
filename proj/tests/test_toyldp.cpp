#include "levyldp/toyldp.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace levyldp;

namespace {

// d = 1, alpha = 2, beta = 0.5: nu(dz) = |z|^{-1.5} exp(-z^2) dz on both half lines.
double tail_mass(double u) {
  return 2.0 * oracle::gl5_geometric([](double r) { return std::pow(r, -1.5) * std::exp(-r * r); }, u, u + 8.0, 200);
}

double first_moment_big() {
  return 2.0 * oracle::gl5_geometric([](double r) { return std::pow(r, -0.5) * std::exp(-r * r); }, 1.0, 9.0, 200);
}

}  // namespace

// =============================================================================
// Simulation
// =============================================================================

TEST(ToyModel, ZeroHorizonIsZero) {
  ToyModelConfig cfg;
  cfg.T = 0.0;
  cfg.eps_grid = {1.0};
  cfg.trials = 10;
  for (const auto& t : simulate_toy(cfg, 0, Rng(1))) {
    EXPECT_EQ(t.I, 0.0);
    EXPECT_EQ(t.J, 0.0);
    EXPECT_EQ(t.L, 0.0);
  }
}

TEST(ToyModel, BigJumpCountAndMean) {
  ToyModelConfig cfg;
  cfg.eps_grid = {0.2};
  cfg.trials = 40000;
  const double beta_big = tail_mass(1.0);
  EXPECT_NEAR(big_jump_mass(cfg), beta_big, 1e-9);
  EXPECT_NEAR(beta_big, 0.196987, 1e-6);
  auto trials = simulate_toy(cfg, 0, Rng(4));
  double n = 0, j = 0, j2 = 0;
  for (const auto& t : trials) {
    n += t.n_big;
    j += t.J;
    j2 += t.J * t.J;
  }
  const double N = static_cast<double>(trials.size());
  const double lambda = cfg.T * beta_big / 0.2;
  EXPECT_NEAR(n / N, lambda, 4 * std::sqrt(lambda / N));
  // Wald: E J = eps * lambda * E|W| = T int_{|z|>=1} |z| dnu
  const double mean_j = first_moment_big();
  EXPECT_NEAR(mean_j, 0.246256, 1e-6);
  double var_j = j2 / N - (j / N) * (j / N);
  EXPECT_NEAR(j / N, mean_j, 4 * std::sqrt(var_j / N));
}

TEST(ToyModel, DecompositionAndRepresentationAreExact) {
  ToyModelConfig cfg;
  cfg.eps_grid = {0.5};
  cfg.trials = 200;
  auto trials = simulate_toy(cfg, 0, Rng(9), true);
  for (const auto& t : trials) {
    EXPECT_EQ(t.L, t.I + t.J);
    EXPECT_EQ(big_jump_sum(0.5, t.big_sizes), t.J);
    EXPECT_EQ(static_cast<long>(t.big_sizes.size()), t.n_big);
    for (double r : t.big_sizes) EXPECT_GE(r, 1.0);
    for (double tk : t.big_times) EXPECT_LE(tk, cfg.T);
  }
}

TEST(ToyModel, WorkersDoNotChangeTrials) {
  ToyModelConfig cfg;
  cfg.eps_grid = {0.5};
  cfg.trials = 100;
  auto a = simulate_toy(cfg, 0, Rng(2));
  cfg.workers = 3;
  auto b = simulate_toy(cfg, 0, Rng(2));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].L, b[i].L);
}

TEST(ToyModel, RejectsBadParameters) {
  ToyModelConfig cfg;
  cfg.alpha = 1.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.beta = 1.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = {};
  cfg.p = 1.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

// =============================================================================
// Single-jump tail
// =============================================================================

TEST(SingleJumpTail, ExactTailAndRules) {
  ToyModelConfig cfg;
  auto rep = single_jump_tail(cfg, {1.0, 2.0, 3.0, 4.0, 5.0});
  EXPECT_EQ(rep.points[0].exact, 1.0);
  for (const auto& p : rep.points) {
    if (p.u == 1.0) continue;
    EXPECT_NEAR(p.exact / (tail_mass(p.u) / tail_mass(1.0)), 1.0, 1e-8) << "u=" << p.u;
    EXPECT_NEAR(p.exact_alt / p.exact, 1.0, 0.01);
  }
}

TEST(SingleJumpTail, CalibratedBoundDominates) {
  ToyModelConfig cfg;
  auto rep = single_jump_tail(cfg, {2.0, 3.0, 4.0, 6.0});
  for (const auto& p : rep.points) EXPECT_TRUE(p.dominates) << "u=" << p.u;
  EXPECT_NEAR(rep.points[0].bound, rep.points[0].exact, 1e-12 * rep.points[0].exact);
}

TEST(SingleJumpTail, IncompleteGammaAsymptotics) {
  // tail = Gamma(-beta/alpha, u^alpha) / (alpha beta_big) * S_0 ~ u^{-alpha-beta} e^{-u^alpha}
  ToyModelConfig cfg;
  auto rep = single_jump_tail(cfg, {3.0, 4.0, 5.0});
  double lo = kInf, hi = 0.0;
  for (const auto& p : rep.points) {
    lo = std::min(lo, p.asymptotic_ratio);
    hi = std::max(hi, p.asymptotic_ratio);
  }
  EXPECT_LT(hi / lo - 1.0, 0.10);
  // limit constant S_0 / (alpha beta_big)
  EXPECT_LT(rep.points.back().asymptotic_ratio, 2.0 / (2.0 * rep.beta_big));
}

// =============================================================================
// Big-jump scale
// =============================================================================

TEST(BigJumpScale, LatticeMatchesClosedForm) {
  // threshold 2 at eps = 0.5: exceed iff N >= 2 or (N = 1 and |W| > 2)
  ToyModelConfig cfg;
  auto lat = magnitude_lattice(cfg);
  const double beta_big = tail_mass(1.0);
  const double lambda = beta_big / 0.5;
  double exact = 1.0 - oracle::poisson_pmf(0, lambda) -
                 oracle::poisson_pmf(1, lambda) * (1.0 - tail_mass(2.0) / beta_big);
  auto p = compound_tail_exact(lat, lambda, 2.0);
  ASSERT_TRUE(p.has_value());
  EXPECT_NEAR(*p / exact, 1.0, 1e-6);
  // M = 0: at least one jump
  auto p0 = compound_tail_exact(lat, lambda, 0.0);
  EXPECT_NEAR(*p0, 1.0 - std::exp(-lambda), 1e-12);
}

TEST(BigJumpScale, LatticeAgreesWithMonteCarlo) {
  ToyModelConfig cfg;
  cfg.eps_grid = {0.5, 0.33};
  auto rep = big_jump_scale(cfg, Rng(12), 100000);
  for (const auto& p : rep.points) {
    ASSERT_TRUE(p.exact.has_value());
    EXPECT_LT(std::abs(p.z_score), 4.0) << "eps=" << p.eps;
    EXPECT_NEAR(p.proxy, -1.0 / p.eps - rep.beta_big, 1e-12);
  }
}

TEST(BigJumpScale, UnderflowIsReported) {
  ToyModelConfig cfg;
  auto lat = magnitude_lattice(cfg);
  EXPECT_FALSE(compound_tail_exact(lat, 0.2, 500.0).has_value());
}

// =============================================================================
// Small-jump scale
// =============================================================================

TEST(SmallJumpScale, HugeThresholdIsBelowResolution) {
  ToyModelConfig cfg;
  cfg.M = 1000.0;
  cfg.eps_grid = {0.5};
  auto pts = small_jump_scale(cfg, Rng(3), 2000);
  EXPECT_EQ(pts[0].exceed, 0);
  EXPECT_FALSE(pts[0].eps_ln_p.has_value());
  EXPECT_TRUE(pts[0].dominated);
}

TEST(SmallJumpScale, ChernoffBoundHolds) {
  ToyModelConfig cfg;
  cfg.M = 0.5;
  cfg.eps_grid = {0.5};
  auto pts = small_jump_scale(cfg, Rng(5), 20000);
  const auto& p = pts[0];
  EXPECT_TRUE(p.dominated);
  EXPECT_GT(p.exceed, 0);
  EXPECT_NEAR(p.lambda, std::pow(0.5, -1.5), 1e-12);
  // second moment of the simulated marks by an independent rule
  double m2 = 2.0 * oracle::gl5_geometric([](double r) { return std::sqrt(r) * std::exp(-r * r); }, 1e-3, 1.0, 60);
  EXPECT_NEAR(p.proxy, -p.lambda * 0.5 * 0.5 + p.lambda * 0.25 * m2, 1e-8);
  EXPECT_GT(p.neglected_variance, 0.0);
  EXPECT_LT(p.neglected_variance, 1e-4);
}
