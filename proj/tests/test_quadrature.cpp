#include "levyldp/quadrature.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace levyldp;

class BothRules : public ::testing::TestWithParam<quad::Rule> {};

TEST_P(BothRules, GaussianHalfLine) {
  quad::Options opt{.rel_tol = 1e-12, .rule = GetParam()};
  double v = quad::integrate([](double x) { return std::exp(-x * x); }, 0.0, kInf, opt).value;
  EXPECT_NEAR(v, oracle::kSqrtPi / 2, 1e-11);
}

TEST_P(BothRules, EndpointSingularity) {
  quad::Options opt{.rel_tol = 1e-10, .rule = GetParam()};
  double v = quad::integrate([](double x) { return x > 0 ? 1.0 / std::sqrt(x) : 0.0; }, 0.0, 1.0, opt).value;
  EXPECT_NEAR(v, 2.0, 1e-7);
}

TEST_P(BothRules, PowerTail) {
  quad::Options opt{.rel_tol = 1e-11, .rule = GetParam()};
  double v = quad::integrate([](double x) { return std::pow(x, -1.5) * std::exp(-x); }, 1.0, kInf, opt).value;
  // Gamma(-1/2, 1) = 2 e^{-1} - 2 sqrt(pi) erfc(1)
  EXPECT_NEAR(v, 2 * std::exp(-1.0) - 2 * oracle::kSqrtPi * std::erfc(1.0), 1e-10);
}

TEST_P(BothRules, DivergentTailIsReported) {
  quad::Options opt{.rule = GetParam()};
  EXPECT_THROW(quad::integrate([](double x) { return std::exp(0.5 * x); }, 0.0, kInf, opt), QuadratureError);
}

INSTANTIATE_TEST_SUITE_P(Quadrature, BothRules, ::testing::Values(quad::Rule::kronrod, quad::Rule::simpson));

TEST(Quadrature, CheckedFlagsSlowDivergence) {
  EXPECT_THROW(quad::integrate_checked([](double x) { return 1.0 / x; }, 1.0, kInf), QuadratureError);
  EXPECT_NEAR(quad::integrate_checked([](double x) { return 1.0 / (x * x); }, 1.0, kInf), 1.0, 1e-9);
}

TEST(Quadrature, GaussLegendreExactForPolynomials) {
  for (int n : {1, 2, 5, 8, 13}) {
    auto r = quad::gauss_legendre(n);
    for (int p = 0; p < 2 * n; ++p) {
      double s = 0;
      for (int i = 0; i < n; ++i) s += r.weights[i] * std::pow(r.nodes[i], p);
      double exact = p % 2 == 1 ? 0.0 : 2.0 / (p + 1);
      EXPECT_NEAR(s, exact, 1e-13) << "n=" << n << " p=" << p;
    }
  }
}

TEST(Quadrature, AgreesWithIndependentRule) {
  auto f = [](double x) { return std::cos(3 * x) * std::exp(-x); };
  double v = quad::value(f, 0.0, 5.0, {.rel_tol = 1e-12});
  EXPECT_NEAR(v, oracle::gl5(f, 0.0, 5.0, 400), 1e-11);
}
