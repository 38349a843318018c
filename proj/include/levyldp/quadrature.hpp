#pragma once

// One-dimensional adaptive quadrature. Two independent rules are provided so
// that results can be cross-checked: a globally adaptive Gauss-Kronrod (7/15)
// scheme and a locally adaptive Simpson rule with Richardson extrapolation.
// Semi-infinite ranges are handled by summing doubling-length segments.

#include "levyldp/core.hpp"

#include <array>
#include <cmath>
#include <queue>
#include <string>
#include <utility>
#include <vector>

namespace levyldp::quad {

enum class Rule { kronrod, simpson };

struct Options {
  double rel_tol = 1e-10;
  double abs_tol = 1e-300;
  int max_subdivisions = 4000;
  Rule rule = Rule::kronrod;
};

struct Result {
  double value = 0.0;
  double error = 0.0;
  long evaluations = 0;
};

namespace detail {

inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gk15(F& f, double a, double b, long& evals) {
  double c = 0.5 * (a + b);
  double h = 0.5 * (b - a);
  double fc = f(c);
  double rk = fc * kWgk[7];
  double rg = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    double dx = h * kXgk[j];
    double f1 = f(c - dx);
    double f2 = f(c + dx);
    rk += kWgk[j] * (f1 + f2);
    if (j % 2 == 1) rg += kWg[j / 2] * (f1 + f2);
  }
  evals += 15;
  double value = rk * h;
  double err = std::abs((rk - rg) * h);
  return {a, b, value, err};
}

inline void check_finite(double v, double a, double b) {
  if (!std::isfinite(v))
    throw QuadratureError("integrand not finite on [" + std::to_string(a) + ", " + std::to_string(b) + "]");
}

template <class F>
Result kronrod_finite(F& f, double a, double b, const Options& opt) {
  Result out;
  if (a == b) return out;
  std::priority_queue<Segment> heap;
  Segment s = gk15(f, a, b, out.evaluations);
  check_finite(s.value, a, b);
  double total = s.value;
  double err = s.error;
  heap.push(s);
  int splits = 0;
  while (err > std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
    if (splits >= opt.max_subdivisions)
      throw QuadratureError("Gauss-Kronrod did not converge on [" + std::to_string(a) + ", " +
                            std::to_string(b) + "] (error " + std::to_string(err) + ")");
    Segment worst = heap.top();
    heap.pop();
    double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // cannot subdivide further in floating point
      heap.push({worst.a, worst.b, worst.value, 0.0});
      err -= worst.error;
      continue;
    }
    Segment l = gk15(f, worst.a, mid, out.evaluations);
    Segment r = gk15(f, mid, worst.b, out.evaluations);
    check_finite(l.value + r.value, worst.a, worst.b);
    total += l.value + r.value - worst.value;
    err += l.error + r.error - worst.error;
    heap.push(l);
    heap.push(r);
    ++splits;
  }
  // Re-sum in a fixed order for a stable value.
  std::vector<Segment> segs;
  segs.reserve(heap.size());
  while (!heap.empty()) {
    segs.push_back(heap.top());
    heap.pop();
  }
  std::sort(segs.begin(), segs.end(), [](const Segment& x, const Segment& y) { return x.a < y.a; });
  double v = 0.0, e = 0.0;
  for (const auto& sg : segs) {
    v += sg.value;
    e += sg.error;
  }
  out.value = v;
  out.error = e;
  return out;
}

template <class F>
Result simpson_finite(F& f, double a, double b, const Options& opt) {
  Result out;
  if (a == b) return out;
  struct Frame {
    double a, b, fa, fm, fb, whole, tol;
    int depth;
  };
  double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  out.evaluations += 3;
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  check_finite(whole, a, b);
  // Coarse first pass fixes the absolute target from the magnitude of the integral.
  double scale = std::abs(whole);
  {
    long dummy = 0;
    Segment s = gk15(f, a, b, dummy);
    out.evaluations += dummy;
    scale = std::max(scale, std::abs(s.value));
  }
  double tol0 = std::max(opt.abs_tol, opt.rel_tol * scale);
  std::vector<Frame> stack;
  stack.push_back({a, b, fa, fm, fb, whole, tol0, 0});
  double total = 0.0, err = 0.0;
  long budget = 2L * opt.max_subdivisions * 50;
  while (!stack.empty()) {
    Frame fr = stack.back();
    stack.pop_back();
    double m = 0.5 * (fr.a + fr.b);
    double lm = 0.5 * (fr.a + m), rm = 0.5 * (m + fr.b);
    double flm = f(lm), frm = f(rm);
    out.evaluations += 2;
    double left = (m - fr.a) / 6.0 * (fr.fa + 4.0 * flm + fr.fm);
    double right = (fr.b - m) / 6.0 * (fr.fm + 4.0 * frm + fr.fb);
    double diff = left + right - fr.whole;
    check_finite(left + right, fr.a, fr.b);
    if (std::abs(diff) <= 15.0 * fr.tol || fr.depth >= 60 || !(lm > fr.a && rm < fr.b)) {
      total += left + right + diff / 15.0;
      err += std::abs(diff) / 15.0;
      continue;
    }
    if (out.evaluations > budget)
      throw QuadratureError("adaptive Simpson exceeded its evaluation budget on [" + std::to_string(a) + ", " +
                            std::to_string(b) + "]");
    stack.push_back({m, fr.b, fr.fm, frm, fr.fb, right, 0.5 * fr.tol, fr.depth + 1});
    stack.push_back({fr.a, m, fr.fa, flm, fr.fm, left, 0.5 * fr.tol, fr.depth + 1});
  }
  out.value = total;
  out.error = err;
  return out;
}

template <class F>
Result finite(F& f, double a, double b, const Options& opt) {
  return opt.rule == Rule::kronrod ? kronrod_finite(f, a, b, opt) : simpson_finite(f, a, b, opt);
}

}  // namespace detail

/// Integral of f over [a, b]; b may be +infinity.
template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}) {
  require(!std::isnan(a) && !std::isnan(b), "integrate: NaN bound");
  require(std::isfinite(a), "integrate: lower bound must be finite");
  if (b <= a) return {};
  if (std::isfinite(b)) return detail::finite(f, a, b, opt);

  // Semi-infinite: segments of doubling length until two consecutive
  // segments are negligible relative to the running total.
  Result out;
  double len = std::max(1.0, std::abs(a));
  double lo = a;
  int quiet = 0;
  for (int k = 0; k < 200; ++k) {
    double hi = lo + len;
    Options seg_opt = opt;
    Result r = detail::finite(f, lo, hi, seg_opt);
    out.value += r.value;
    out.error += r.error;
    out.evaluations += r.evaluations;
    if (!std::isfinite(out.value)) throw QuadratureError("integral diverges (non-finite partial sum)");
    bool negligible = std::abs(r.value) <= std::max(opt.abs_tol, 0.1 * opt.rel_tol * std::abs(out.value));
    quiet = negligible ? quiet + 1 : 0;
    if (quiet >= 2 && k >= 2) return out;
    lo = hi;
    len *= 2.0;
    if (!std::isfinite(lo)) break;
  }
  throw QuadratureError("integral over [" + std::to_string(a) + ", inf) does not converge");
}

template <class F>
double value(F&& f, double a, double b, const Options& opt = {}) {
  return integrate(std::forward<F>(f), a, b, opt).value;
}

/// Integral accepted only if two successive tolerance levels agree to
/// `agree_rel` (relative); otherwise the estimate is treated as divergent.
template <class F>
double integrate_checked(F&& f, double a, double b, Rule rule = Rule::kronrod, double agree_rel = 1e-8) {
  Options coarse{.rel_tol = 1e-9, .rule = rule};
  Options fine{.rel_tol = 1e-11, .rule = rule};
  double v1 = integrate(f, a, b, coarse).value;
  double v2 = integrate(f, a, b, fine).value;
  double scale = std::max(std::abs(v2), 1e-300);
  if (std::abs(v1 - v2) > agree_rel * scale && std::abs(v1 - v2) > 1e-14)
    throw QuadratureError("refinement levels disagree: " + std::to_string(v1) + " vs " + std::to_string(v2));
  return v2;
}

// =============================================================================
// Fixed rules
// =============================================================================

struct NodeRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (Newton iteration on P_n).
inline NodeRule gauss_legendre(int n) {
  require(n >= 1, "gauss_legendre: n >= 1");
  NodeRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.nodes[i] = -x;
    r.nodes[n - 1 - i] = x;
    r.weights[i] = w;
    r.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) r.nodes[n / 2] = 0.0;
  return r;
}

}  // namespace levyldp::quad
