#pragma once

// Built-in coefficient sets. All are linear:
//   a(x,y) = Ax x + Ay y + a0,  f(x,y) = Fx x + Fy y,  c(x,z) = C z,  h(x,y,z) = H z.

#include "levyldp/core.hpp"
#include "levyldp/msde.hpp"

#include <Eigen/Dense>

#include <string>

namespace levyldp {

struct LinearSpec {
  Mat Ax, Ay, Fx, Fy, C, H;
  Eigen::VectorXd a0;
};

/// Averaged drift of a linear system: the frozen fast process relaxes to
/// y*(x) = -Fy^{-1} Fx x and the compensated noise has mean zero.
inline Mat linear_abar_matrix(const LinearSpec& ls) {
  return ls.Ax - ls.Ay * ls.Fy.fullPivLu().solve(ls.Fx);
}

inline SystemCoefficients linear_system(const std::string& name, const LinearSpec& ls) {
  const int d = static_cast<int>(ls.Ax.rows());
  const int k = static_cast<int>(ls.Fy.rows());
  require(ls.Ax.cols() == d && ls.Ay.rows() == d && ls.Ay.cols() == k, "linear system: Ax, Ay shapes");
  require(ls.Fx.rows() == k && ls.Fx.cols() == d && ls.Fy.cols() == k, "linear system: Fx, Fy shapes");
  require(ls.C.rows() == d && ls.C.cols() == d, "linear system: C must be d x d");
  require(ls.H.rows() == k && ls.H.cols() == d, "linear system: H must be k x d");
  require(ls.a0.size() == d, "linear system: a0 must have d entries");
  require(3 * d + 2 * k <= kMaxDim && d <= 3, "linear system: dimensions too large (need d <= 3, 3d + 2k <= " + std::to_string(kMaxDim) + ")");
  SystemCoefficients s;
  s.name = name;
  s.d = d;
  s.k = k;
  s.a = [ls](const Vec& x, const Vec& y) -> Vec { return ls.Ax * x + ls.Ay * y + ls.a0; };
  s.f = [ls](const Vec& x, const Vec& y) -> Vec { return ls.Fx * x + ls.Fy * y; };
  s.c = [ls](const Vec&, const Vec& z) -> Vec { return ls.C * z; };
  s.h = [ls](const Vec&, const Vec&, const Vec& z) -> Vec { return ls.H * z; };
  auto opnorm = [](const Mat& m) {
    if (m.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Mat>(m).singularValues()(0);
  };
  s.L = std::max({opnorm(ls.Ax), opnorm(ls.Ay), opnorm(ls.Fx), opnorm(ls.Fy)});
  s.Lambda = std::max(opnorm(ls.H), 1e-300);
  Mat sym = 0.5 * (ls.Fy + ls.Fy.transpose());
  double lmax = Eigen::SelfAdjointEigenSolver<Mat>(sym).eigenvalues().maxCoeff();
  s.beta1 = std::max(0.0, -2.0 * lmax);
  s.beta2 = 1.0;
  s.c_odd_in_mark = s.h_odd_in_mark = true;
  s.c_state_independent = s.h_state_independent = true;
  return s;
}

inline LinearSpec scalar_linear(double ax, double ay, double fx, double fy, double c, double h, double a0 = 0.0) {
  LinearSpec ls;
  ls.Ax = Mat::Constant(1, 1, ax);
  ls.Ay = Mat::Constant(1, 1, ay);
  ls.Fx = Mat::Constant(1, 1, fx);
  ls.Fy = Mat::Constant(1, 1, fy);
  ls.C = Mat::Constant(1, 1, c);
  ls.H = Mat::Constant(1, 1, h);
  ls.a0 = Eigen::VectorXd::Constant(1, a0);
  return ls;
}

/// a = -x + y/2, f = -(y - x), c = z, h = z. Averaged drift -x/2.
inline LinearSpec linear_benchmark_spec() { return scalar_linear(-1.0, 0.5, 1.0, -1.0, 1.0, 1.0); }

/// Linear benchmark with an added constant 0.1 in a. Averaged drift -x/2 + 0.1.
inline LinearSpec tilted_benchmark_spec() { return scalar_linear(-1.0, 0.5, 1.0, -1.0, 1.0, 1.0, 0.1); }

/// Fast variable of OU type: f = -rate (y - x).
inline LinearSpec ou_benchmark_spec(double rate) { return scalar_linear(-1.0, 0.5, rate, -rate, 1.0, 1.0); }

/// Linear benchmark without fast jumps (h = 0).
inline LinearSpec linear_decoupled_spec() { return scalar_linear(-1.0, 0.5, 1.0, -1.0, 1.0, 0.0); }

inline SystemCoefficients linear_benchmark() { return linear_system("linear", linear_benchmark_spec()); }

inline DriftFn linear_abar(const LinearSpec& ls) {
  Mat m = linear_abar_matrix(ls);
  Eigen::VectorXd a0 = ls.a0;
  return [m, a0](const Vec& x) -> Vec { return m * x + a0; };
}

/// Named built-in: linear, tilted, ou (uses `rate`), linear_decoupled.
inline LinearSpec named_benchmark(const std::string& name, double rate = 1.0) {
  if (name == "linear") return linear_benchmark_spec();
  if (name == "tilted") return tilted_benchmark_spec();
  if (name == "ou") return ou_benchmark_spec(rate);
  if (name == "linear_decoupled") return linear_decoupled_spec();
  throw InvalidArgument("unknown benchmark '" + name + "' (linear, tilted, ou, linear_decoupled)");
}

}  // namespace levyldp
