#pragma once

// Adaptive Dormand-Prince 5(4) integrator with cubic Hermite dense output.

#include "levyldp/core.hpp"

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <vector>

namespace levyldp::ode {

using State = Eigen::VectorXd;

struct Options {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double h_init = 0.0;    // 0 picks a starting step automatically
  double h_min = 1e-14;   // relative to the span
  long max_steps = 1000000;
};

/// Accepted steps of one integration; evaluates the solution anywhere in the span.
class Trajectory {
 public:
  struct Step {
    double t0, t1;
    State y0, y1, f0, f1;
  };

  void push(Step s) { steps_.push_back(std::move(s)); }
  bool empty() const { return steps_.empty(); }
  double t_begin() const { return steps_.front().t0; }
  double t_end() const { return steps_.back().t1; }
  const State& final_state() const { return steps_.back().y1; }
  const std::vector<Step>& steps() const { return steps_; }

  State operator()(double t) const {
    require(!steps_.empty(), "Trajectory: empty");
    if (t <= steps_.front().t0) return steps_.front().y0;
    if (t >= steps_.back().t1) return steps_.back().y1;
    auto it = std::upper_bound(steps_.begin(), steps_.end(), t, [](double v, const Step& s) { return v < s.t1; });
    const Step& s = *it;
    double h = s.t1 - s.t0;
    double th = (t - s.t0) / h;
    double h00 = (1 + 2 * th) * (1 - th) * (1 - th);
    double h10 = th * (1 - th) * (1 - th);
    double h01 = th * th * (3 - 2 * th);
    double h11 = th * th * (th - 1);
    return h00 * s.y0 + h10 * h * s.f0 + h01 * s.y1 + h11 * h * s.f1;
  }

 private:
  std::vector<Step> steps_;
};

class StepUnderflow : public Error {
 public:
  using Error::Error;
};

/// Integrates y' = f(t, y) from t0 to t1. `f(t, y, dy)` writes the derivative.
template <class F>
Trajectory integrate(F&& f, double t0, const State& y0, double t1, const Options& opt = {}) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                          a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                          e6 = 22.0 / 525, e7 = -1.0 / 40;

  Trajectory traj;
  const long n = y0.size();
  State y = y0, k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), yt(n), ynew(n), err(n);
  double t = t0;
  double span = t1 - t0;
  require(span >= 0.0, "ode::integrate: t1 < t0");
  f(t, y, k1);
  if (span == 0.0) {
    traj.push({t0, t1, y, y, k1, k1});
    return traj;
  }
  auto norm_of = [&](const State& e, const State& ya, const State& yb) {
    double s = 0.0;
    for (long i = 0; i < n; ++i) {
      double sc = opt.abs_tol + opt.rel_tol * std::max(std::abs(ya[i]), std::abs(yb[i]));
      s += (e[i] / sc) * (e[i] / sc);
    }
    return std::sqrt(s / static_cast<double>(std::max<long>(n, 1)));
  };
  double h = opt.h_init > 0.0 ? opt.h_init : std::min(span, 0.01 * span + 1e-3);
  long steps = 0;
  double fac_old = 1e-4;
  while (t < t1) {
    if (++steps > opt.max_steps) throw StepUnderflow("ode::integrate: step budget exhausted");
    if (t + h > t1 || t1 - (t + h) < 1e-12 * span) h = t1 - t;
    yt = y + h * a21 * k1;
    f(t + c2 * h, yt, k2);
    yt = y + h * (a31 * k1 + a32 * k2);
    f(t + c3 * h, yt, k3);
    yt = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
    f(t + c4 * h, yt, k4);
    yt = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f(t + c5 * h, yt, k5);
    yt = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    f(t + h, yt, k6);
    ynew = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    f(t + h, ynew, k7);
    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double en = norm_of(err, y, ynew);
    if (!std::isfinite(en)) en = 1e10;
    if (en <= 1.0) {
      double tn = (t1 - (t + h) < 1e-12 * span) ? t1 : t + h;
      traj.push({t, tn, y, ynew, k1, k7});
      t = tn;
      y = ynew;
      k1 = k7;
      // PI step size control
      double fac = 0.9 * std::pow(en, -0.7 / 5.0) * std::pow(fac_old, 0.4 / 5.0);
      fac_old = std::max(en, 1e-4);
      h *= std::clamp(fac, 0.2, 5.0);
    } else {
      h *= std::max(0.2, 0.9 * std::pow(en, -0.2));
    }
    if (t < t1 && h < opt.h_min * std::max(1.0, std::abs(span)))
      throw StepUnderflow("ode::integrate: step size underflow at t=" + std::to_string(t));
  }
  return traj;
}

}  // namespace levyldp::ode
