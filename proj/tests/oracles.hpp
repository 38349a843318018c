#pragma once

// Independent reference values used by the tests: closed forms, series and
// brute-force rules that share no code with the library's quadrature.

#include <cmath>
#include <algorithm>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

namespace oracle {

inline const double kSqrtPi = std::sqrt(std::numbers::pi);

/// Composite Gauss-Legendre (5 point) with a fixed number of panels.
inline double gl5(const std::function<double(double)>& f, double a, double b, int panels) {
  static const double x[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                              0.9061798459386640};
  static const double w[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                              0.2369268850561891};
  double h = (b - a) / panels, s = 0.0;
  for (int p = 0; p < panels; ++p) {
    double c = a + (p + 0.5) * h;
    for (int i = 0; i < 5; ++i) s += w[i] * f(c + 0.5 * h * x[i]);
  }
  return 0.5 * h * s;
}

/// Geometric-panel composite rule for integrands with an integrable power
/// singularity at `a` > 0 or a slowly decaying tail.
inline double gl5_geometric(const std::function<double(double)>& f, double a, double b, int panels) {
  double s = 0.0, ratio = std::pow(b / a, 1.0 / panels);
  double lo = a;
  for (int p = 0; p < panels; ++p) {
    double hi = lo * ratio;
    s += gl5(f, lo, hi, 4);
    lo = hi;
  }
  return s;
}

/// int (1 - cos(xi z)) exp(-z^2) dz over R by its Taylor series in xi.
inline double gaussian_symbol_series(double xi) {
  double s = 0.0;
  for (int n = 1; n < 60; ++n) {
    double term = std::tgamma(n + 0.5) * std::pow(xi, 2 * n) / std::tgamma(2.0 * n + 1.0);
    s += (n % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return s;
}

/// Poisson(lambda) pmf.
inline double poisson_pmf(int n, double lambda) {
  return std::exp(-lambda + n * std::log(lambda) - std::lgamma(n + 1.0));
}

// =============================================================================
// Coarse-grid action of the scalar linear skeleton equation
// =============================================================================

/// U' = -rate U + sum_c (g_jc - 1) m1_c on `intervals` equal pieces of
/// [0, T], cost sum_j dt sum_c m0_c (g ln g - g + 1), endpoint U(T) = z.
struct LinearGridAction {
  double rate = 0.5;
  double x0 = 0.0, z = 0.0, T = 1.0;
  int intervals = 4;
  std::vector<double> m0, m1;  // per-cell mass and first moment of nu
};

/// Cells {z < 0}, {0 <= z < 1}, {z >= 1} of nu(dz) = exp(-z^2) dz.
inline LinearGridAction gaussian_three_cells(double x0, double z, double T) {
  LinearGridAction p;
  p.x0 = x0;
  p.z = z;
  p.T = T;
  double h = 0.5 * kSqrtPi;
  p.m0 = {h, h * std::erf(1.0), h * std::erfc(1.0)};
  p.m1 = {-0.5, 0.5 * (1.0 - std::exp(-1.0)), 0.5 * std::exp(-1.0)};
  return p;
}

inline double phi_entropy(double g) { return g == 0.0 ? 1.0 : g * std::log(g) - g + 1.0; }

/// w_j = int_{I_j} exp(-rate (T - s)) ds: weight of interval j's forcing in U(T).
inline std::vector<double> forcing_weights(const LinearGridAction& p) {
  std::vector<double> w(p.intervals);
  double dt = p.T / p.intervals;
  for (int j = 0; j < p.intervals; ++j)
    w[j] = (std::exp(-p.rate * (p.T - (j + 1) * dt)) - std::exp(-p.rate * (p.T - j * dt))) / p.rate;
  return w;
}

/// Exhaustive search over a lattice of log-control values. Each interval's
/// cell values are enumerated jointly; the best cost per binned endpoint
/// contribution is kept and the intervals are combined by min-plus
/// convolution. A second pass repeats the search on a finer lattice centred
/// on the first-pass optimum.
inline double exhaustive_linear_action(const LinearGridAction& p, int lattice = 41) {
  const int m = p.intervals, nc = static_cast<int>(p.m0.size());
  const double dt = p.T / m;
  const auto w = forcing_weights(p);
  const double R = p.z - p.x0 * std::exp(-p.rate * p.T);
  std::vector<std::vector<double>> centre(m, std::vector<double>(nc, 0.0));
  double best_cost = std::numeric_limits<double>::infinity();
  struct Pass {
    double half, bin;
  };
  for (Pass pass : {Pass{3.0, 4e-3}, Pass{0.3, 4e-4}}) {
    // per-interval tables: bin -> (cost, combo)
    std::vector<std::vector<double>> cost(m);
    std::vector<std::vector<long>> combo(m);
    std::vector<long> lo(m);
    long combos = 1;
    for (int c = 0; c < nc; ++c) combos *= lattice;
    auto u_of = [&](int j, int c, long idx) { return centre[j][c] + pass.half * (2.0 * idx / (lattice - 1) - 1.0); };
    for (int j = 0; j < m; ++j) {
      std::vector<std::pair<long, std::pair<double, long>>> items;
      items.reserve(combos);
      long bmin = std::numeric_limits<long>::max(), bmax = std::numeric_limits<long>::min();
      for (long k = 0; k < combos; ++k) {
        long rest = k;
        double y = 0.0, e = 0.0;
        for (int c = 0; c < nc; ++c) {
          double g = std::exp(u_of(j, c, rest % lattice));
          rest /= lattice;
          y += (g - 1.0) * p.m1[c];
          e += p.m0[c] * phi_entropy(g);
        }
        long b = std::lround(w[j] * y / pass.bin);
        bmin = std::min(bmin, b);
        bmax = std::max(bmax, b);
        items.push_back({b, {dt * e, k}});
      }
      lo[j] = bmin;
      cost[j].assign(bmax - bmin + 1, std::numeric_limits<double>::infinity());
      combo[j].assign(bmax - bmin + 1, -1);
      for (const auto& [b, ck] : items)
        if (ck.first < cost[j][b - bmin]) {
          cost[j][b - bmin] = ck.first;
          combo[j][b - bmin] = ck.second;
        }
    }
    // min-plus convolution with back pointers
    std::vector<double> acc = cost[0];
    long acc_lo = lo[0];
    std::vector<std::vector<long>> back(m);
    for (int j = 1; j < m; ++j) {
      std::vector<double> next(acc.size() + cost[j].size() - 1, std::numeric_limits<double>::infinity());
      back[j].assign(next.size(), -1);
      for (std::size_t a = 0; a < acc.size(); ++a) {
        if (!std::isfinite(acc[a])) continue;
        for (std::size_t b = 0; b < cost[j].size(); ++b) {
          double v = acc[a] + cost[j][b];
          if (v < next[a + b]) {
            next[a + b] = v;
            back[j][a + b] = static_cast<long>(a);
          }
        }
      }
      acc = std::move(next);
      acc_lo += lo[j];
    }
    long target = std::lround(R / pass.bin) - acc_lo;
    if (target < 0 || target >= static_cast<long>(acc.size()) || !std::isfinite(acc[target]))
      return std::numeric_limits<double>::infinity();
    best_cost = acc[target];
    // recover the optimum and recentre
    long pos = target;
    for (int j = m - 1; j >= 0; --j) {
      long prev = j > 0 ? back[j][pos] : 0;
      long own = j > 0 ? pos - prev : pos;
      long k = combo[j][own];
      // own is an offset into interval j's table
      for (int c = 0; c < nc; ++c) {
        centre[j][c] = u_of(j, c, k % lattice);
        k /= lattice;
      }
      pos = prev;
    }
  }
  return best_cost;
}

/// Exact optimum of the same convex problem from its Lagrange conditions:
/// ln g_jc = lambda w_j m1_c / (dt m0_c), lambda fixed by the endpoint.
inline double dual_linear_action(const LinearGridAction& p) {
  const int m = p.intervals, nc = static_cast<int>(p.m0.size());
  const double dt = p.T / m;
  const auto w = forcing_weights(p);
  const double R = p.z - p.x0 * std::exp(-p.rate * p.T);
  auto g = [&](double lam, int j, int c) { return std::exp(lam * w[j] * p.m1[c] / (dt * p.m0[c])); };
  auto F = [&](double lam) {
    double s = 0.0;
    for (int j = 0; j < m; ++j)
      for (int c = 0; c < nc; ++c) s += w[j] * (g(lam, j, c) - 1.0) * p.m1[c];
    return s - R;
  };
  double a = -1.0, b = 1.0;
  while (F(a) > 0.0) a *= 2.0;
  while (F(b) < 0.0) b *= 2.0;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (a + b);
    (F(mid) < 0.0 ? a : b) = mid;
  }
  double lam = 0.5 * (a + b), e = 0.0;
  for (int j = 0; j < m; ++j)
    for (int c = 0; c < nc; ++c) e += dt * p.m0[c] * phi_entropy(g(lam, j, c));
  return e;
}

}  // namespace oracle
