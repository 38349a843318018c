#include "levyldp/levy.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

using namespace levyldp;

namespace {

// Appendix-family radial mass on [a, b) in d = 1 by an independent rule.
double appendix_mass_1d(double alpha, double beta, double a, double b) {
  auto q = [&](double r) { return 2.0 * std::pow(r, -1.0 - beta) * std::exp(-std::pow(r, alpha)); };
  return oracle::gl5_geometric(q, a, b, 400);
}

}  // namespace

// =============================================================================
// Integrals
// =============================================================================

TEST(LevyMeasure, GaussianMassesAndMoments) {
  for (int d = 1; d <= 3; ++d) {
    auto spec = LevyMeasureSpec::gaussian(d);
    RadialRegion all{0.0, kInf, 0};
    double pid = std::pow(std::numbers::pi, 0.5 * d);
    EXPECT_NEAR(nu_mass(spec, all), pid, 1e-9 * pid) << "d=" << d;
    double m2 = nu_integral(spec, [](const Vec& z) { return z.squaredNorm(); }, all);
    EXPECT_NEAR(m2, 0.5 * d * pid, 1e-7 * pid) << "d=" << d;
    // half-space masses
    EXPECT_NEAR(nu_mass(spec, {0.0, kInf, 1}), 0.5 * pid, 1e-9 * pid);
    double half = nu_integral(spec, [](const Vec&) { return 1.0; }, {0.0, kInf, -1});
    EXPECT_NEAR(half, 0.5 * pid, 1e-6 * pid) << "d=" << d;
  }
}

TEST(LevyMeasure, AnnulusMassMatchesErfc) {
  auto spec = LevyMeasureSpec::gaussian(1);
  EXPECT_NEAR(nu_mass(spec, {1.0, kInf, 0}), oracle::kSqrtPi * std::erfc(1.0), 1e-12);
  EXPECT_EQ(nu_mass(spec, {1.0, 1.0, 0}), 0.0);
}

TEST(LevyMeasure, AppendixMassAgainstIndependentRule) {
  auto spec = LevyMeasureSpec::appendix(1, 2.0, 0.5, 0.1);
  double exact = appendix_mass_1d(2.0, 0.5, 0.1, 12.0);
  EXPECT_NEAR(active_mass(spec), exact, 1e-9 * exact);
  double big = appendix_mass_1d(2.0, 0.5, 1.0, 12.0);
  EXPECT_NEAR(nu_mass(spec, {1.0, kInf, 0}), big, 1e-10);
}

TEST(LevyMeasure, OriginOfInfiniteMassMeasureIsRejected) {
  auto spec = LevyMeasureSpec::appendix(1, 2.0, 0.5, 0.1);
  try {
    nu_mass(spec, {0.0, 1.0, 0});
    FAIL() << "expected InvalidArgument";
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("delta_min"), std::string::npos);
  }
}

// =============================================================================
// Validation
// =============================================================================

TEST(Validation, AcceptsDefaults) {
  EXPECT_TRUE(validate_measure(LevyMeasureSpec::gaussian(1)).ok());
  EXPECT_TRUE(validate_measure(LevyMeasureSpec::gaussian(3)).ok());
  EXPECT_TRUE(validate_measure(LevyMeasureSpec::appendix(2, 2.0, 0.5, 0.05)).ok());
}

TEST(Validation, NamesTheFailingCheck) {
  auto zero_cut = LevyMeasureSpec::appendix(1, 2.0, 0.5, 0.0);
  auto rep = validate_measure(zero_cut);
  EXPECT_FALSE(rep.ok());
  EXPECT_NE(std::find(rep.failed().begin(), rep.failed().end(), "delta_min"), rep.failed().end());

  auto heavy = LevyMeasureSpec::gaussian(1, 1.0, 0.4);  // exp(0.5 r^2) moment diverges
  rep = validate_measure(heavy);
  ASSERT_NE(rep.find("exponential_moment"), nullptr);
  EXPECT_FALSE(rep.find("exponential_moment")->passed);
  EXPECT_TRUE(rep.find("small_jump_moment")->passed);

  auto skewed = LevyMeasureSpec::gaussian(1);
  skewed.skew = 0.3;
  rep = validate_measure(skewed);
  EXPECT_FALSE(rep.find("symmetry")->passed);
  skewed.declared_symmetric = false;
  EXPECT_TRUE(validate_measure(skewed).ok());

  auto bad_tail = LevyMeasureSpec::appendix(1, 2.0, 1.2, 0.1);
  EXPECT_THROW(require_valid(bad_tail), InvalidArgument);
}

TEST(Validation, FlagsSkewedTruncation) {
  auto sym = LevyMeasureSpec::appendix(1, 2.0, 0.5, 1e-3);
  const Check* c = validate_measure(sym).find("asymmetric_truncation");
  ASSERT_NE(c, nullptr);
  EXPECT_TRUE(c->passed);
  auto skewed = sym;
  skewed.skew = 0.2;
  skewed.declared_symmetric = false;
  auto rep = validate_measure(skewed);
  c = rep.find("asymmetric_truncation");
  EXPECT_FALSE(c->passed);
  EXPECT_FALSE(c->gating);
  EXPECT_TRUE(rep.ok());
  // finite measures integrate every mark, so skew is harmless
  auto g = LevyMeasureSpec::gaussian(1);
  g.skew = 0.3;
  g.declared_symmetric = false;
  EXPECT_TRUE(validate_measure(g).find("asymmetric_truncation")->passed);
}

TEST(Validation, SmallJumpMomentValue) {
  auto spec = LevyMeasureSpec::appendix(1, 2.0, 0.5, 0.1);
  // int min(1, r^2) q(r) dr, q(r) = 2 r^{-1.5} e^{-r^2}
  auto inner = [](double r) { return 2.0 * std::pow(r, 0.5) * std::exp(-r * r); };
  double expect = oracle::gl5_geometric(inner, 1e-12, 1.0, 2000) + appendix_mass_1d(2.0, 0.5, 1.0, 12.0);
  EXPECT_NEAR(validate_measure(spec).find("small_jump_moment")->value, expect, 1e-7);
}

// =============================================================================
// Symbol
// =============================================================================

TEST(LevySymbol, GaussianAgainstSeriesAndClosedForm) {
  auto spec = LevyMeasureSpec::gaussian(1);
  for (double xi : {0.1, 1.0, 2.5}) {
    auto psi = levy_symbol(spec, scalar_vec(xi));
    EXPECT_NEAR(psi.real(), oracle::gaussian_symbol_series(xi), 1e-10) << xi;
    EXPECT_NEAR(psi.real(), oracle::kSqrtPi * (1 - std::exp(-xi * xi / 4)), 1e-10) << xi;
    EXPECT_NEAR(psi.imag(), 0.0, 1e-12);
  }
  EXPECT_EQ(levy_symbol(spec, scalar_vec(0.0)), std::complex<double>(0.0, 0.0));
}

TEST(LevySymbol, SkewGivesImaginaryPart) {
  auto spec = LevyMeasureSpec::gaussian(1);
  spec.skew = 0.5;
  spec.declared_symmetric = false;
  double xi = 1.0;
  // Im psi = int (t - sin t) skew sign(z) e^{-z^2} dz = 2 skew int_0^inf (z - sin z) e^{-z^2}
  auto f = [](double z) { return (z - std::sin(z)) * std::exp(-z * z); };
  double expect = 2 * 0.5 * oracle::gl5(f, 0.0, 10.0, 200);
  EXPECT_NEAR(levy_symbol(spec, scalar_vec(xi)).imag(), expect, 1e-10);
}

// =============================================================================
// Fixed-node rule
// =============================================================================

TEST(MarkQuadrature, MatchesAdaptive) {
  auto spec = LevyMeasureSpec::appendix(2, 2.0, 0.5, 0.1);
  RadialRegion reg = spec.active_region();
  MarkQuadrature mq(spec, reg, 32, 8);
  auto g = [](const Vec& z) { return std::cos(z[0]) + z[1] * z[1]; };
  double ref = nu_integral(spec, g, reg);
  EXPECT_NEAR(mq.integrate(g), ref, 1e-4 * std::abs(ref));
}

// =============================================================================
// Sampling
// =============================================================================

namespace {

// DKW bound at confidence 1 - 1e-6.
double dkw(std::size_t n) { return std::sqrt(std::log(2.0 / 1e-6) / (2.0 * n)); }

void check_radial_cdf(const LevyMeasureSpec& spec, const RadialRegion& reg, MarkSampler::Method method,
                      std::uint64_t seed) {
  MarkSampler s(spec, reg, method);
  Rng rng(seed);
  const std::size_t n = 40000;
  std::vector<double> r(n);
  for (auto& x : r) x = s.sample(rng).norm();
  std::sort(r.begin(), r.end());
  double total = nu_mass(spec, {reg.r_min, reg.r_max, 0});
  double worst = 0.0;
  for (double p : {0.05, 0.2, 0.4, 0.6, 0.8, 0.95}) {
    double q = r[static_cast<std::size_t>(p * n)];
    double F = nu_mass(spec, {reg.r_min, q, 0}) / total;
    worst = std::max(worst, std::abs(F - p));
  }
  EXPECT_LT(worst, dkw(n) + 1.0 / n);
}

}  // namespace

TEST(MarkSampler, GaussianRadialLawTable) {
  check_radial_cdf(LevyMeasureSpec::gaussian(1), {0.0, kInf, 0}, MarkSampler::Method::table, 11);
  check_radial_cdf(LevyMeasureSpec::gaussian(2), {0.0, kInf, 0}, MarkSampler::Method::table, 12);
  check_radial_cdf(LevyMeasureSpec::gaussian(3), {0.5, 2.0, 0}, MarkSampler::Method::table, 13);
}

TEST(MarkSampler, RadialLawRejection) {
  check_radial_cdf(LevyMeasureSpec::gaussian(2), {0.0, kInf, 0}, MarkSampler::Method::rejection, 14);
  check_radial_cdf(LevyMeasureSpec::gaussian(1), {2.5, kInf, 0}, MarkSampler::Method::rejection, 15);
  check_radial_cdf(LevyMeasureSpec::appendix(1, 2.0, 0.5, 0.1), {0.1, kInf, 0}, MarkSampler::Method::rejection, 16);
}

TEST(MarkSampler, AppendixRadialLawTable) {
  check_radial_cdf(LevyMeasureSpec::appendix(1, 2.0, 0.5, 0.05), {0.05, kInf, 0}, MarkSampler::Method::table, 17);
  check_radial_cdf(LevyMeasureSpec::appendix(2, 1.5, 0.3, 0.1), {1.0, kInf, 0}, MarkSampler::Method::table, 18);
}

TEST(MarkSampler, DirectionsAndSides) {
  auto spec = LevyMeasureSpec::gaussian(3);
  MarkSampler s(spec, {0.0, kInf, 0});
  Rng rng(3);
  const int n = 50000;
  Vec m = Vec::Zero(3);
  for (int i = 0; i < n; ++i) m += s.sample_direction(rng);
  // each coordinate of a uniform direction on S^2 has variance 1/3
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(m[i] / n, 0.0, 5 * std::sqrt(1.0 / 3 / n));

  MarkSampler pos(spec, {0.0, kInf, 1});
  for (int i = 0; i < 1000; ++i) EXPECT_GE(pos.sample(rng)[0], 0.0);

  auto sk = LevyMeasureSpec::gaussian(1);
  sk.skew = 0.4;
  sk.declared_symmetric = false;
  MarkSampler ss(sk, {0.0, kInf, 0});
  int plus = 0;
  for (int i = 0; i < n; ++i) plus += ss.sample(rng)[0] > 0;
  EXPECT_NEAR(static_cast<double>(plus) / n, 0.7, 5 * std::sqrt(0.21 / n));
}

TEST(MarkSampler, EmptyRegionRejected) {
  EXPECT_THROW(MarkSampler(LevyMeasureSpec::gaussian(1), {1.0, 1.0, 0}), InvalidArgument);
}

TEST(MarkSampler, GaussianMoments) {
  auto spec = LevyMeasureSpec::gaussian(1);
  Rng rng(21);
  MarkSampler s(spec, {0.0, kInf, 0});
  const int n = 1000000;
  double m1 = 0, m2 = 0;
  for (int i = 0; i < n; ++i) {
    double z = s.sample(rng)[0];
    m1 += z;
    m2 += z * z;
  }
  // normalised density N(0, 1/2): E z^2 = 1/2, Var z^2 = 2 * (1/2)^2
  EXPECT_NEAR(m1 / n, 0.0, 4 * std::sqrt(0.5 / n));
  EXPECT_NEAR(m2 / n, 0.5, 4 * std::sqrt(0.5 / n));
}

TEST(MarkSampler, AppendixTailProbability) {
  auto spec = LevyMeasureSpec::appendix(1, 2.0, 0.5, 0.1);
  Rng rng(22);
  MarkSampler s(spec, {1.0, kInf, 0});
  const int n = 1000000;
  int above = 0;
  for (int i = 0; i < n; ++i) above += s.sample(rng).norm() > 2.0;
  double p = appendix_mass_1d(2.0, 0.5, 2.0, 12.0) / appendix_mass_1d(2.0, 0.5, 1.0, 12.0);
  EXPECT_NEAR(static_cast<double>(above) / n, p, 4 * std::sqrt(p * (1 - p) / n));
}

TEST(LevyMeasure, SmallJumpIntegralStableUnderRefinement) {
  for (auto spec : {LevyMeasureSpec::appendix(1, 2.0, 0.5, 1e-3), LevyMeasureSpec::appendix(2, 1.5, 0.7, 1e-2)}) {
    auto g = [](const Vec& z) { return std::min(1.0, z.squaredNorm()); };
    double coarse = nu_integral(spec, g, spec.active_region(), {.rel_tol = 1e-8});
    double fine = nu_integral(spec, g, spec.active_region(), {.rel_tol = 1e-12});
    EXPECT_LT(std::abs(coarse - fine), 1e-6 * std::abs(fine));
  }
}

TEST(LevyMeasure, AbsMomentTwoRules) {
  auto spec = LevyMeasureSpec::appendix(1, 2.0, 0.5, 0.1);
  RadialRegion big{1.0, kInf, 0};
  auto absz = [](const Vec& z) { return z.norm(); };
  double gk = nu_integral(spec, absz, big, {.rel_tol = 1e-10, .rule = quad::Rule::kronrod});
  double sp = nu_integral(spec, absz, big, {.rel_tol = 1e-10, .rule = quad::Rule::simpson});
  EXPECT_NEAR(gk, sp, 1e-6 * gk);
  EXPECT_EQ(gk, nu_integral(spec, absz, big, {.rel_tol = 1e-10, .rule = quad::Rule::kronrod}));
}
