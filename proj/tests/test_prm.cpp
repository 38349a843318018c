#include "levyldp/prm.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>

using namespace levyldp;

// =============================================================================
// Control grids
// =============================================================================

TEST(ControlGrid, LookupAndValidation) {
  auto cells = signed_bands({0.0, 1.0, kInf});
  ControlGrid g({0.0, 1.0, 2.0}, cells, {{1, 2, 3, 4}, {5, 6, 7, 8}});
  // cells: (-,[0,1)), (-,[1,inf)), (+,[0,1)), (+,[1,inf))
  EXPECT_EQ(g.value(0.5, scalar_vec(-0.5)), 1.0);
  EXPECT_EQ(g.value(0.5, scalar_vec(2.0)), 4.0);
  EXPECT_EQ(g.value(1.5, scalar_vec(0.5)), 7.0);
  EXPECT_EQ(g.value(2.0, scalar_vec(-3.0)), 6.0);
  EXPECT_EQ(g.sup(), 8.0);
  EXPECT_FALSE(g.is_identity());
  EXPECT_TRUE(ControlGrid::constant(1.0, 1.0).is_identity());
  EXPECT_THROW(g.value(2.5, scalar_vec(0.0)), InvalidArgument);

  EXPECT_THROW(ControlGrid({0.0, 1.0}, cells, {{1, 1, 1, -1}}), InvalidArgument);
  EXPECT_THROW(ControlGrid({0.0, 1.0}, {{0.0, 1.0, 0}}, {{1}}), InvalidArgument);           // gap
  EXPECT_THROW(ControlGrid({0.0, 1.0}, {{0.0, kInf, 0}, {0.5, kInf, 1}}, {{1, 1}}), InvalidArgument);  // overlap
  EXPECT_THROW(ControlGrid({0.5, 1.0}, {{0.0, kInf, 0}}, {{1}}), InvalidArgument);
}

TEST(ControlGrid, CellMasses) {
  auto spec = LevyMeasureSpec::gaussian(1);
  auto m = cell_masses(spec, signed_bands({0.0, 1.0, kInf}));
  double half = 0.5 * oracle::kSqrtPi;
  EXPECT_NEAR(m[0], half * std::erf(1.0), 1e-13);
  EXPECT_NEAR(m[1], half * std::erfc(1.0), 1e-13);
  EXPECT_NEAR(m[0] + m[1] + m[2] + m[3], oracle::kSqrtPi, 1e-12);
}

// =============================================================================
// Simulation
// =============================================================================

TEST(PoissonRandomMeasure, CountsAreAtTheRightRate) {
  auto spec = LevyMeasureSpec::gaussian(1);
  MarkSampler s(spec, {0.0, kInf, 0});
  const double eps = 0.25, T = 2.0;
  const double lambda = oracle::kSqrtPi / eps * T;
  Rng master(5);
  const int reps = 2000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < reps; ++i) {
    Rng r = master.split(i);
    auto st = simulate_prm(s, eps, T, r);
    for (std::size_t k = 0; k < st.events.size(); ++k) {
      ASSERT_GT(st.events[k].t, 0.0);
      ASSERT_LE(st.events[k].t, T);
      if (k) ASSERT_GT(st.events[k].t, st.events[k - 1].t);
    }
    double n = static_cast<double>(st.events.size());
    sum += n;
    sum2 += n * n;
  }
  double mean = sum / reps, var = sum2 / reps - mean * mean;
  EXPECT_NEAR(mean, lambda, 5 * std::sqrt(lambda / reps));
  EXPECT_NEAR(var / lambda, 1.0, 0.15);
}

TEST(PoissonRandomMeasure, BudgetGuard) {
  auto spec = LevyMeasureSpec::gaussian(1);
  Rng r(1);
  EXPECT_THROW(simulate_prm(spec, 1e-3, 10.0, {0.0, kInf, 0}, r, 100.0), InvalidArgument);
}

TEST(PoissonRandomMeasure, ThinningMatchesControlledIntensity) {
  auto spec = LevyMeasureSpec::gaussian(1);
  MarkSampler s(spec, spec.active_region());
  auto cells = signed_bands({0.0, 1.0, kInf});
  // g = 2 on big positive marks, 0.5 on small negative ones, 1 elsewhere.
  ControlGrid g({0.0, 1.0}, cells, {{0.5, 1.0, 1.0, 2.0}});
  auto m = cell_masses(spec, cells);
  const double eps = 0.5;
  double lambda = (0.5 * m[0] + m[1] + m[2] + 2.0 * m[3]) / eps;
  double big_pos = 2.0 * m[3] / eps;
  Rng master(9);
  const int reps = 3000;
  double n_all = 0, n_big = 0;
  for (int i = 0; i < reps; ++i) {
    auto st = simulate_controlled_prm(s, eps, g, master.split(i));
    n_all += st.events.size();
    for (const auto& e : st.events) n_big += e.z[0] >= 1.0;
  }
  EXPECT_NEAR(n_all / reps, lambda, 5 * std::sqrt(lambda / reps));
  EXPECT_NEAR(n_big / reps, big_pos, 5 * std::sqrt(big_pos / reps));
}

TEST(PoissonRandomMeasure, ThinningNeedsHeadroom) {
  auto spec = LevyMeasureSpec::gaussian(1);
  Rng r(2);
  auto st = simulate_prm(spec, 1.0, 1.0, {0.0, kInf, 0}, r);
  EXPECT_THROW(thin_to_control(st, ControlGrid::constant(1.0, 2.0), 1.0, r), InvalidArgument);
}

TEST(PoissonRandomMeasure, LiveSourceMatchesBatchSimulation) {
  auto spec = LevyMeasureSpec::gaussian(1);
  auto sampler = std::make_shared<const MarkSampler>(spec, spec.active_region());
  auto cells = signed_bands({0.0, 1.0, kInf});
  ControlGrid g({0.0, 0.5, 1.0}, cells, {{0.2, 1.0, 1.0, 3.0}, {1.0, 0.0, 2.0, 1.0}});
  Rng rng(77);
  auto batch = simulate_controlled_prm(*sampler, 0.3, g, rng);
  LiveJumpSource live(sampler, 0.3, rng, &g);
  for (const auto& e : batch.events) {
    auto l = live.next();
    ASSERT_TRUE(l.has_value());
    EXPECT_EQ(l->t, e.t);
    EXPECT_EQ(l->z[0], e.z[0]);
  }
  auto after = live.next();
  ASSERT_TRUE(after.has_value());
  EXPECT_GT(after->t, 1.0);

  // g == 1 leaves the uncontrolled event stream untouched
  ControlGrid id = ControlGrid::constant(1.0, 1.0);
  LiveJumpSource plain(sampler, 0.3, rng), ident(sampler, 0.3, rng, &id);
  for (int i = 0; i < 50; ++i) {
    auto a = plain.next(), b = ident.next();
    EXPECT_EQ(a->t, b->t);
    EXPECT_EQ(a->z[0], b->z[0]);
  }
}

TEST(PoissonRandomMeasure, MergeKeepsTimeOrder) {
  auto spec = LevyMeasureSpec::gaussian(1);
  Rng r1(1), r2(2);
  auto a = simulate_prm(spec, 0.5, 3.0, {0.0, 1.0, 0}, r1);
  auto b = simulate_prm(spec, 0.5, 3.0, {1.0, kInf, 0}, r2);
  auto m = merge_streams(a, b);
  EXPECT_EQ(m.events.size(), a.events.size() + b.events.size());
  for (std::size_t k = 1; k < m.events.size(); ++k) EXPECT_LE(m.events[k - 1].t, m.events[k].t);
  EXPECT_EQ(m.count_until(3.0), m.events.size());
}

TEST(Compensator, SignedExample) {
  auto spec = LevyMeasureSpec::gaussian(1);
  auto cells = signed_bands({0.0, kInf});
  auto id = [](const Vec& z) { return z; };
  // g = 2 on z > 0, 0 on z < 0: (2-1)(1/2) + (0-1)(-1/2) = 1
  ControlGrid g({0.0, 1.0}, cells, {{0.0, 2.0}});
  EXPECT_NEAR(compensator_drift(g, id, spec, 0.5)[0], 1.0, 1e-12);
  EXPECT_EQ(compensator_drift(ControlGrid::constant(1.0, 1.0), id, spec, 0.5)[0], 0.0);
  EXPECT_NEAR(compensator_drift(ControlGrid::constant(1.0, 2.0), id, spec, 0.5)[0], 0.0, 1e-14);
}

TEST(PoissonRandomMeasure, MeanCountExamples) {
  auto gauss = LevyMeasureSpec::gaussian(1);
  MarkSampler all(gauss, {0.0, kInf, 0});
  Rng master(31);
  const int reps = 100000;
  double n = 0;
  for (int i = 0; i < reps; ++i) {
    Rng r = master.split(i);
    n += simulate_prm(all, 0.5, 1.0, r).events.size();
  }
  double lambda = 2 * oracle::kSqrtPi;
  EXPECT_NEAR(n / reps, lambda, 4 * std::sqrt(lambda / reps));

  auto app = LevyMeasureSpec::appendix(1, 2.0, 0.5, 0.1);
  MarkSampler big(app, {1.0, kInf, 0});
  double nb = 0;
  for (int i = 0; i < 20000; ++i) {
    Rng r = master.split(1000000 + i);
    nb += simulate_prm(big, 0.1, 1.0, r).events.size();
  }
  double lb = 10 * nu_mass(app, {1.0, kInf, 0});
  EXPECT_NEAR(nb / 20000, lb, 4 * std::sqrt(lb / 20000));

  Rng r(1);
  EXPECT_TRUE(simulate_prm(gauss, 1.0, 0.0, {0.0, kInf, 0}, r).events.empty());
}

TEST(PoissonRandomMeasure, ConstantControls) {
  auto spec = LevyMeasureSpec::gaussian(1);
  MarkSampler s(spec, {0.0, kInf, 0});
  Rng master(41);
  const int reps = 20000;
  double n = 0;
  for (int i = 0; i < reps; ++i) n += simulate_controlled_prm(s, 0.5, ControlGrid::constant(1.0, 2.0), master.split(i)).events.size();
  double lambda = 4 * oracle::kSqrtPi;
  EXPECT_NEAR(n / reps, lambda, 4 * std::sqrt(lambda / reps));
  EXPECT_TRUE(simulate_controlled_prm(s, 0.5, ControlGrid::constant(1.0, 0.0), master).events.empty());
}

TEST(PoissonRandomMeasure, Determinism) {
  auto spec = LevyMeasureSpec::appendix(2, 2.0, 0.5, 0.1);
  MarkSampler s(spec, spec.active_region());
  Rng a(5), b(5);
  auto x = simulate_prm(s, 0.3, 2.0, a), y = simulate_prm(s, 0.3, 2.0, b);
  ASSERT_EQ(x.events.size(), y.events.size());
  for (std::size_t i = 0; i < x.events.size(); ++i) {
    EXPECT_EQ(x.events[i].t, y.events[i].t);
    EXPECT_EQ(x.events[i].z[0], y.events[i].z[0]);
    EXPECT_EQ(x.events[i].z[1], y.events[i].z[1]);
  }
}

TEST(PoissonRandomMeasure, Superposition) {
  // merged streams at rates r1 + r2 versus one stream at the summed rate
  auto spec = LevyMeasureSpec::gaussian(1);
  MarkSampler lo(spec, {0.0, 1.0, 0}), hi(spec, {1.0, kInf, 0}), all(spec, {0.0, kInf, 0});
  Rng master(51);
  const int reps = 20000;
  double s1 = 0, q1 = 0, s2 = 0, q2 = 0;
  for (int i = 0; i < reps; ++i) {
    Rng a = master.split(3 * i), b = master.split(3 * i + 1), c = master.split(3 * i + 2);
    double m = merge_streams(simulate_prm(lo, 0.5, 1.0, a), simulate_prm(hi, 0.5, 1.0, b)).events.size();
    double d = simulate_prm(all, 0.5, 1.0, c).events.size();
    s1 += m, q1 += m * m, s2 += d, q2 += d * d;
  }
  double m1 = s1 / reps, m2 = s2 / reps;
  double v1 = q1 / reps - m1 * m1, v2 = q2 / reps - m2 * m2;
  double z = (m1 - m2) / std::sqrt((v1 + v2) / reps);
  EXPECT_LT(std::abs(z), normal_quantile(0.9995));
}
