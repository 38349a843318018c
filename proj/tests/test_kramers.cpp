#include "levyldp/benchmarks.hpp"
#include "levyldp/kramers.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace levyldp;

namespace {

std::vector<ExitLevel> synthetic(double V, double c, const std::vector<double>& eps_grid) {
  std::vector<ExitLevel> out;
  for (double eps : eps_grid) {
    ExitLevel l;
    l.eps = eps;
    for (int i = 0; i < 5; ++i) {
      ExitRecord r;
      r.eps = eps;
      r.sigma = std::exp((V + c * eps) / eps);
      r.locus = scalar_vec(1.0);
      l.records.push_back(r);
    }
    out.push_back(l);
  }
  return out;
}

}  // namespace

// =============================================================================
// Regression
// =============================================================================

TEST(KramersRegression, ExactArrheniusRecords) {
  auto fit = kramers_regression(synthetic(0.6, 0.0, {0.3, 0.2, 0.15}), 0.6);
  EXPECT_NEAR(fit.intercept, 0.6, 1e-12);
  EXPECT_NEAR(fit.slope, 0.0, 1e-12);
  EXPECT_FALSE(fit.partial);
  EXPECT_TRUE(fit.medians_increasing);
  for (const auto& l : fit.levels) {
    EXPECT_NEAR(l.eps_ln_mean, 0.6, 1e-12);
    EXPECT_DOUBLE_EQ(l.band_fraction[0], 1.0);
  }
}

TEST(KramersRegression, PrefactorShowsUpAsSlope) {
  auto fit = kramers_regression(synthetic(0.6, 0.8, {0.3, 0.2, 0.15, 0.1}), 0.6);
  EXPECT_NEAR(fit.intercept, 0.6, 1e-12);
  EXPECT_NEAR(fit.slope, 0.8, 1e-11);
}

TEST(KramersRegression, TooFewLevelsIsPartial) {
  auto fit = kramers_regression(synthetic(0.6, 0.0, {0.3, 0.2}), 0.6);
  EXPECT_TRUE(fit.partial);
  auto levels = synthetic(0.6, 0.0, {0.3, 0.2, 0.15});
  for (auto& r : levels[2].records) r.censored = true;
  levels[2].censored = levels[2].records.size();
  levels[2].uninformative = true;
  fit = kramers_regression(levels, 0.6);
  EXPECT_TRUE(fit.partial);
  EXPECT_FALSE(fit.levels[2].usable);
}

// =============================================================================
// Monte Carlo exits
// =============================================================================

TEST(ExitTrials, NoNoiseNeverExits) {
  auto s = linear_benchmark();
  JumpNoise silent(LevyMeasureSpec::gaussian(1, 0.0));
  ExitExperimentConfig cfg;
  cfg.eps_grid = {0.3};
  cfg.trials = 5;
  cfg.max_steps = 2000;
  cfg.x0 = scalar_vec(0.5);
  auto levels = run_exit_trials(s, silent, cfg, Rng(1));
  ASSERT_EQ(levels.size(), 1u);
  EXPECT_TRUE(levels[0].uninformative);
  for (const auto& r : levels[0].records) {
    EXPECT_TRUE(r.censored);
    EXPECT_DOUBLE_EQ(r.sigma, levels[0].time_cap);
  }
  auto h = exit_locus_histogram(levels[0], cfg.domain.boundary_nodes());
  EXPECT_TRUE(h.empty);
}

TEST(ExitTrials, SymmetricBenchmarkSplitsEvenly) {
  auto s = linear_benchmark();
  JumpNoise noise(LevyMeasureSpec::gaussian(1));
  ExitExperimentConfig cfg;
  cfg.eps_grid = {0.3};
  cfg.trials = 600;
  auto levels = run_exit_trials(s, noise, cfg, Rng(5));
  const auto& lvl = levels[0];
  EXPECT_EQ(lvl.censored, 0u);
  for (const auto& r : lvl.records) {
    EXPECT_FALSE(cfg.domain.contains(r.locus));
    EXPECT_GE(r.ell, 1);  // starts at 0, inside the inner ball
    EXPECT_LE(r.sigma, lvl.time_cap);
    EXPECT_GT(r.sigma, 0.0);
  }
  auto h = exit_locus_histogram(lvl, cfg.domain.boundary_nodes());
  ASSERT_EQ(h.freq.size(), 2u);
  double sd = std::sqrt(0.25 / h.n);
  EXPECT_NEAR(h.freq[1], 0.5, 4 * sd);
  EXPECT_FALSE(h.concentration.has_value());
}

TEST(ExitTrials, ExcursionCountNeedsTheInnerBall) {
  // Starting between rho' and the boundary with a strong outward kick: the
  // path can leave before ever reaching the inner ball.
  auto s = linear_benchmark();
  JumpNoise noise(LevyMeasureSpec::gaussian(1, 3.0));
  ExitExperimentConfig cfg;
  cfg.eps_grid = {0.5};
  cfg.trials = 200;
  cfg.x0 = scalar_vec(0.9);
  auto levels = run_exit_trials(s, noise, cfg, Rng(8));
  int zero = 0;
  for (const auto& r : levels[0].records) zero += r.ell == 0;
  EXPECT_GT(zero, 0);
}

TEST(ExitTrials, WorkerCountDoesNotChangeResults) {
  auto s = linear_benchmark();
  JumpNoise noise(LevyMeasureSpec::gaussian(1));
  ExitExperimentConfig cfg;
  cfg.eps_grid = {0.4, 0.3};
  cfg.trials = 40;
  auto a = run_exit_trials(s, noise, cfg, Rng(17));
  cfg.workers = 4;
  auto b = run_exit_trials(s, noise, cfg, Rng(17));
  EXPECT_EQ(exit_records_csv(a).str(), exit_records_csv(b).str());
}

TEST(ExitTrials, MediansGrowAsEpsShrinks) {
  auto s = linear_benchmark();
  JumpNoise noise(LevyMeasureSpec::gaussian(1));
  ExitExperimentConfig cfg;
  cfg.eps_grid = {0.5, 0.3};
  cfg.trials = 300;
  auto fit = kramers_regression(run_exit_trials(s, noise, cfg, Rng(23)), 0.6);
  EXPECT_TRUE(fit.medians_increasing);
  EXPECT_TRUE(fit.partial);
}

TEST(ExitTrials, RejectsBadConfig) {
  auto s = linear_benchmark();
  JumpNoise noise(LevyMeasureSpec::gaussian(1));
  ExitExperimentConfig cfg;
  cfg.x0 = scalar_vec(2.0);
  EXPECT_THROW(run_exit_trials(s, noise, cfg, Rng(1)), InvalidArgument);
  cfg.x0 = scalar_vec(0.0);
  cfg.rho = 0.5;
  cfg.rho_prime = 0.3;
  EXPECT_THROW(run_exit_trials(s, noise, cfg, Rng(1)), InvalidArgument);
}

TEST(ExitLocus, ShareTrend) {
  LocusHistogram a, b;
  a.eps = 0.3;
  a.freq = {0.4, 0.6};
  b.eps = 0.2;
  b.freq = {0.3, 0.7};
  EXPECT_TRUE(locus_share_nondecreasing({a, b}, 1));
  EXPECT_FALSE(locus_share_nondecreasing({a, b}, 0));
}

TEST(ExitLocus, ConcentrationNearTarget) {
  ExitLevel l;
  l.eps = 0.2;
  for (double x : {1.05, 1.3, -1.1, 1.02}) {
    ExitRecord r;
    r.locus = scalar_vec(x);
    l.records.push_back(r);
  }
  auto h = exit_locus_histogram(l, Domain::interval(-1, 1).boundary_nodes(), scalar_vec(1.1), 0.1);
  ASSERT_TRUE(h.concentration.has_value());
  EXPECT_DOUBLE_EQ(*h.concentration, 0.5);
  EXPECT_EQ(h.counts[1], 3u);
}
