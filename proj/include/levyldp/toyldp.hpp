#pragma once

// Pure-jump model L^eps_t = eps * (compensated jumps of N^{1/eps}) with the
// tempered measure |z|^{-(d+beta)} exp(-|z|^alpha) dz. It splits into the
// small-jump part I^eps (marks in delta_min <= |z| < 1, first coordinate) and
// the big-jump magnitude J^eps = eps * sum |W_k| over marks |W_k| >= 1.

#include "levyldp/core.hpp"
#include "levyldp/csv.hpp"
#include "levyldp/levy.hpp"
#include "levyldp/parallel.hpp"
#include "levyldp/prm.hpp"
#include "levyldp/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace levyldp {

// =============================================================================
// Configuration
// =============================================================================

struct ToyModelConfig {
  int d = 1;
  double alpha = 2.0;  // tempering exponent, > 1
  double beta = 0.5;   // tail index, in [0, 1)
  double delta_min = 1e-3;
  std::vector<double> eps_grid{0.5, 0.33, 0.25};
  double T = 1.0;
  double M = 1.0;
  double p = 0.5;  // lambda(eps) = eps^{-(1+p)}
  long trials = 1'000'000;
  int workers = 1;
  int lattice = 4096;
  double truncation = 1e-12;  // outer lattice cut at this tail probability
  double event_budget = kDefaultEventBudget;

  LevyMeasureSpec spec() const { return LevyMeasureSpec::appendix(d, alpha, beta, delta_min); }

  void validate() const {
    require(d >= 1 && d <= 3, "toy model: d must lie in 1..3");
    require(alpha > 1.0, "toy model: alpha must be > 1");
    require(beta >= 0.0 && beta < 1.0, "toy model: beta must lie in [0, 1)");
    require(p > 0.0 && p < 1.0, "toy model: p must lie in (0, 1)");
    require(delta_min > 0.0 && delta_min < 1.0, "toy model: delta_min must lie in (0, 1)");
    require(T >= 0.0 && M >= 0.0, "toy model: T and M must be >= 0");
    require(trials >= 1, "toy model: trials must be >= 1");
    require(lattice >= 16, "toy model: lattice too small");
    for (double e : eps_grid) require(e > 0.0 && e <= 1.0, "toy model: eps must lie in (0, 1]");
  }
};

/// nu(B_1^c): rate of big jumps per unit time at eps = 1.
inline double big_jump_mass(const ToyModelConfig& cfg) { return nu_mass(cfg.spec(), {1.0, kInf, 0}); }

// =============================================================================
// Simulation
// =============================================================================

struct ToyTrial {
  double I = 0.0, J = 0.0, L = 0.0;
  long n_small = 0, n_big = 0;
  std::vector<double> big_times, big_sizes;  // filled when recording
};

class ToySimulator {
 public:
  explicit ToySimulator(const ToyModelConfig& cfg)
      : cfg_(cfg), big_(cfg.spec(), {1.0, kInf, 0}), small_(cfg.spec(), {cfg.delta_min, 1.0, 0}) {
    cfg.validate();
  }

  const MarkSampler& big_sampler() const { return big_; }
  const MarkSampler& small_sampler() const { return small_; }

  /// One trial from `seed`: big jumps use the big_jumps child stream, small
  /// jumps the small_jumps child stream.
  ToyTrial trial(double eps, std::uint64_t seed, bool small = true, bool record = false) const {
    ToyTrial out;
    Rng base(seed);
    Rng rb = base.split(stream_tag::big_jumps);
    auto big = simulate_prm(big_, eps, cfg_.T, rb, 1.0, cfg_.event_budget);
    double sum = 0.0;
    for (const auto& e : big.events) {
      double r = e.z.norm();
      sum += r;
      if (record) {
        out.big_times.push_back(e.t);
        out.big_sizes.push_back(r);
      }
    }
    out.n_big = static_cast<long>(big.events.size());
    out.J = eps * sum;
    if (small) {
      Rng rs = base.split(stream_tag::small_jumps);
      auto sm = simulate_prm(small_, eps, cfg_.T, rs, 1.0, cfg_.event_budget);
      double s1 = 0.0;
      for (const auto& e : sm.events) s1 += e.z[0];
      // the measure is symmetric, so the compensator of the first coordinate vanishes
      out.I = eps * s1;
      out.n_small = static_cast<long>(sm.events.size());
    }
    out.L = out.I + out.J;
    return out;
  }

 private:
  ToyModelConfig cfg_;
  MarkSampler big_, small_;
};

/// J^eps recomputed from recorded jump sizes.
inline double big_jump_sum(double eps, const std::vector<double>& sizes) {
  double s = 0.0;
  for (double r : sizes) s += r;
  return eps * s;
}

/// Trials for one eps; trial tr uses derive_seed(master, {eps_index, tr}).
inline std::vector<ToyTrial> simulate_toy(const ToyModelConfig& cfg, std::size_t eps_index, const Rng& rng,
                                          bool record = false) {
  require(eps_index < cfg.eps_grid.size(), "simulate_toy: eps index out of range");
  ToySimulator sim(cfg);
  const double eps = cfg.eps_grid[eps_index];
  std::vector<ToyTrial> out(cfg.trials);
  parallel_for(static_cast<std::size_t>(cfg.trials), cfg.workers, [&](std::size_t tr) {
    out[tr] = sim.trial(eps, derive_seed(rng.seed(), {eps_index, tr}), true, record);
  });
  return out;
}

// =============================================================================
// Single-jump tail
// =============================================================================

struct TailPoint {
  double u = 0.0;
  double exact = 0.0;      // nu(B_u^c) / nu(B_1^c), adaptive Gauss-Kronrod
  double exact_alt = 0.0;  // same with adaptive Simpson
  double bound = 0.0;      // (C / beta_big) u^{d - alpha} exp(-u^alpha / 2)
  bool dominates = false;
  double asymptotic_ratio = 0.0;  // exact / (u^{-alpha-beta} exp(-u^alpha))
  double stated_form_ratio = 0.0;  // exact / (u^{d-alpha} exp(-u^alpha))
};

struct TailReport {
  double beta_big = 0.0;
  double C = 0.0;  // calibrated at u = u_calibration
  double u_calibration = 2.0;
  std::vector<TailPoint> points;
};

/// Tail of one big-jump magnitude. The constant C is fixed so that the bound
/// equals the exact tail at u_calibration; dominance is reported per u.
inline TailReport single_jump_tail(const ToyModelConfig& cfg, const std::vector<double>& u_grid,
                                   double u_calibration = 2.0) {
  cfg.validate();
  auto spec = cfg.spec();
  quad::Options gk{.rel_tol = 1e-12}, simpson{.rel_tol = 1e-12, .rule = quad::Rule::simpson};
  TailReport rep;
  rep.u_calibration = u_calibration;
  rep.beta_big = nu_mass(spec, {1.0, kInf, 0}, gk);
  const double beta_alt = nu_mass(spec, {1.0, kInf, 0}, simpson);
  auto tail = [&](double u, const quad::Options& o, double norm) { return nu_mass(spec, {u, kInf, 0}, o) / norm; };
  auto shape = [&](double u) { return std::pow(u, cfg.d - cfg.alpha) * std::exp(-0.5 * std::pow(u, cfg.alpha)); };
  rep.C = tail(u_calibration, gk, rep.beta_big) * rep.beta_big / shape(u_calibration);
  for (double u : u_grid) {
    require(u >= 1.0, "single_jump_tail: u must be >= 1");
    TailPoint pt;
    pt.u = u;
    pt.exact = u == 1.0 ? 1.0 : tail(u, gk, rep.beta_big);
    pt.exact_alt = u == 1.0 ? 1.0 : tail(u, simpson, beta_alt);
    pt.bound = rep.C / rep.beta_big * shape(u);
    pt.dominates = pt.bound >= pt.exact * (1.0 - 1e-12);
    double ua = std::pow(u, cfg.alpha);
    pt.asymptotic_ratio = pt.exact / (std::pow(u, -cfg.alpha - cfg.beta) * std::exp(-ua));
    pt.stated_form_ratio = pt.exact / (std::pow(u, cfg.d - cfg.alpha) * std::exp(-ua));
    rep.points.push_back(pt);
  }
  return rep;
}

// =============================================================================
// Big-jump scale
// =============================================================================

/// Distribution of one big-jump magnitude |W| on a lattice over
/// [1, R], R the 1 - truncation quantile. Cell k covers [1 + k dr, 1 + (k+1) dr).
struct MagnitudeLattice {
  double dr = 0.0;
  double r_max = 0.0;
  std::vector<double> pmf;
};

inline MagnitudeLattice magnitude_lattice(const ToyModelConfig& cfg) {
  auto spec = cfg.spec();
  quad::Options o{.rel_tol = 1e-12};
  const double mass = nu_mass(spec, {1.0, kInf, 0}, o);
  double lo = 1.0, hi = 2.0;
  while (nu_mass(spec, {hi, kInf, 0}, o) / mass > cfg.truncation) hi *= 1.5;
  for (int it = 0; it < 100; ++it) {
    double mid = 0.5 * (lo + hi);
    (nu_mass(spec, {mid, kInf, 0}, o) / mass > cfg.truncation ? lo : hi) = mid;
  }
  MagnitudeLattice lat;
  lat.r_max = hi;
  lat.dr = (hi - 1.0) / cfg.lattice;
  lat.pmf.resize(cfg.lattice);
  auto gl = quad::gauss_legendre(8);
  for (int k = 0; k < cfg.lattice; ++k) {
    double a = 1.0 + k * lat.dr, b = a + lat.dr, s = 0.0;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i)
      s += gl.weights[i] * spec.radial_profile(0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[i]);
    lat.pmf[k] = 0.5 * (b - a) * s / mass;
  }
  return lat;
}

/// P(sum_{k <= N} |W_k| > threshold), N ~ Poisson(lambda), by Poisson-weighted
/// lattice convolution. Mass inside a cell is spread uniformly when it
/// straddles the threshold. Empty when the result underflows.
inline std::optional<double> compound_tail_exact(const MagnitudeLattice& lat, double lambda, double threshold,
                                                 int max_terms = 64) {
  if (threshold < 0.0) return 1.0;
  const long n_cut = static_cast<long>(std::floor(threshold));  // n > threshold jumps always exceed it
  if (n_cut > max_terms) return std::nullopt;
  auto pois = [&](long n) { return std::exp(-lambda + n * std::log(lambda) - std::lgamma(n + 1.0)); };
  double p = 0.0;
  // n > n_cut: certain exceedance
  for (long n = n_cut + 1;; ++n) {
    double t = lambda > 0.0 ? pois(n) : 0.0;
    p += t;
    if (t < 1e-300 || (n > lambda && t < 1e-17 * p)) break;
  }
  std::vector<double> cur{1.0};  // n = 0: S = 0, which never exceeds threshold >= 0
  for (long n = 1; n <= n_cut; ++n) {
    std::vector<double> next(cur.size() + lat.pmf.size() - 1, 0.0);
    for (std::size_t a = 0; a < cur.size(); ++a) {
      if (cur[a] == 0.0) continue;
      for (std::size_t b = 0; b < lat.pmf.size(); ++b) next[a + b] += cur[a] * lat.pmf[b];
    }
    cur = std::move(next);
    // sum of n cell centres: n + (K + n/2) dr
    double ex = 0.0;
    for (std::size_t K = 0; K < cur.size(); ++K) {
      double centre = n + (static_cast<double>(K) + 0.5 * n) * lat.dr;
      double frac = std::clamp((centre + 0.5 * lat.dr - threshold) / lat.dr, 0.0, 1.0);
      ex += cur[K] * frac;
    }
    p += pois(n) * ex;
  }
  if (!(p > 1e-300)) return std::nullopt;
  return p;
}

struct BigJumpPoint {
  double eps = 0.0;
  double lambda = 0.0;            // mean number of big jumps, T beta_big / eps
  std::optional<double> exact;    // lattice value; empty on underflow
  long mc_trials = 0, mc_exceed = 0;
  double mc_p = 0.0, mc_stderr = 0.0;
  double eps_ln_exact = 0.0, eps_ln_mc = 0.0;
  double proxy = 0.0;  // -M^alpha / eps^{alpha-1} - beta_big T
  double z_score = 0.0;  // (mc - exact) / stderr
  bool dominated = false;  // eps ln P <= proxy + slack
};

struct BigJumpReport {
  double beta_big = 0.0;
  double slack = 0.0;  // calibrated at the largest eps
  std::vector<BigJumpPoint> points;
  bool eps_ln_decreasing = false;  // as eps decreases
};

/// Big-jump tail per eps: lattice-exact value, plain Monte Carlo with
/// `mc_trials` trials (0 skips it), and the analytic proxy. The slack is the
/// excess of eps ln P over the proxy at the largest eps.
inline BigJumpReport big_jump_scale(const ToyModelConfig& cfg, const Rng& rng, long mc_trials) {
  cfg.validate();
  BigJumpReport rep;
  rep.beta_big = big_jump_mass(cfg);
  auto lat = magnitude_lattice(cfg);
  ToySimulator sim(cfg);
  for (std::size_t ei = 0; ei < cfg.eps_grid.size(); ++ei) {
    const double eps = cfg.eps_grid[ei];
    BigJumpPoint pt;
    pt.eps = eps;
    pt.lambda = cfg.T * rep.beta_big / eps;
    pt.exact = compound_tail_exact(lat, pt.lambda, cfg.M / eps);
    if (pt.exact) pt.eps_ln_exact = eps * std::log(*pt.exact);
    pt.proxy = -std::pow(cfg.M, cfg.alpha) / std::pow(eps, cfg.alpha - 1.0) - rep.beta_big * cfg.T;
    if (mc_trials > 0) {
      std::vector<char> hit(mc_trials, 0);
      parallel_for(static_cast<std::size_t>(mc_trials), cfg.workers, [&](std::size_t tr) {
        hit[tr] = sim.trial(eps, derive_seed(rng.seed(), {ei, tr}), false).J > cfg.M ? 1 : 0;
      });
      for (char h : hit) pt.mc_exceed += h;
      pt.mc_trials = mc_trials;
      pt.mc_p = static_cast<double>(pt.mc_exceed) / mc_trials;
      pt.mc_stderr = std::sqrt(std::max(pt.mc_p * (1.0 - pt.mc_p), 1.0 / mc_trials) / mc_trials);
      if (pt.mc_exceed > 0) pt.eps_ln_mc = eps * std::log(pt.mc_p);
      if (pt.exact) pt.z_score = (pt.mc_p - *pt.exact) / pt.mc_stderr;
    }
    rep.points.push_back(pt);
  }
  // slack calibrated at the largest eps, dominance checked everywhere else
  auto first = std::max_element(rep.points.begin(), rep.points.end(),
                                [](const auto& a, const auto& b) { return a.eps < b.eps; });
  if (first != rep.points.end() && first->exact) rep.slack = std::max(0.0, first->eps_ln_exact - first->proxy);
  for (auto& pt : rep.points) pt.dominated = pt.exact && pt.eps_ln_exact <= pt.proxy + rep.slack + 1e-12;
  std::vector<const BigJumpPoint*> by_eps;
  for (const auto& pt : rep.points) by_eps.push_back(&pt);
  std::sort(by_eps.begin(), by_eps.end(), [](auto* a, auto* b) { return a->eps > b->eps; });
  rep.eps_ln_decreasing = by_eps.size() >= 2;
  for (std::size_t i = 1; i < by_eps.size(); ++i)
    if (!(by_eps[i]->exact && by_eps[i - 1]->exact && by_eps[i]->eps_ln_exact < by_eps[i - 1]->eps_ln_exact))
      rep.eps_ln_decreasing = false;
  return rep;
}

// =============================================================================
// Small-jump scale
// =============================================================================

struct SmallJumpPoint {
  double eps = 0.0;
  double lambda = 0.0;  // eps^{-(1+p)}
  long trials = 0, exceed = 0;
  double p_hat = 0.0;
  std::optional<double> eps_ln_p;  // empty: no exceedance at this budget
  double chernoff = 0.0;  // eps ln of the Chernoff bound at lambda(eps)
  double proxy = 0.0;     // -lambda eps M + lambda eps^2 T int_{|z|<1} |z|^2 dnu
  double neglected_variance = 0.0;  // variance of I^eps from marks below delta_min
  bool dominated = false;           // p_hat <= Chernoff bound
  bool proxy_dominated = false;     // eps ln p_hat <= proxy (vacuous when p_hat = 0)
};

/// Small-jump tail P(I^eps_T > M) by Monte Carlo against the Chernoff bound
///   eps ln P <= -lambda eps M + T int (e^{lambda eps z_1} - 1 - lambda eps z_1) dnu
/// over the simulated marks delta_min <= |z| < 1.
inline std::vector<SmallJumpPoint> small_jump_scale(const ToyModelConfig& cfg, const Rng& rng, long trials) {
  cfg.validate();
  auto spec = cfg.spec();
  ToySimulator sim(cfg);
  RadialRegion small{cfg.delta_min, 1.0, 0};
  quad::Options o{.rel_tol = 1e-11};
  const double second = nu_integral(spec, [](const Vec& z) { return z.squaredNorm(); }, small, o);
  // marks below delta_min: int z_1^2 dnu = (1/d) int_0^delta r^2 q(r) dr
  const double below =
      quad::integrate([&](double r) { return r * r * spec.radial_profile(r); }, 0.0, cfg.delta_min, o).value / cfg.d;
  std::vector<SmallJumpPoint> out;
  for (std::size_t ei = 0; ei < cfg.eps_grid.size(); ++ei) {
    const double eps = cfg.eps_grid[ei];
    SmallJumpPoint pt;
    pt.eps = eps;
    pt.lambda = std::pow(eps, -(1.0 + cfg.p));
    const double th = pt.lambda * eps;
    const double cum = nu_integral(
        spec, [&](const Vec& z) { return std::expm1(th * z[0]) - th * z[0]; }, small, o);
    pt.chernoff = -th * cfg.M + cfg.T * cum;
    pt.proxy = -th * cfg.M + pt.lambda * eps * eps * cfg.T * second;
    pt.neglected_variance = eps * cfg.T * below;
    std::vector<char> hit(trials, 0);
    parallel_for(static_cast<std::size_t>(trials), cfg.workers, [&](std::size_t tr) {
      Rng r(derive_seed(rng.seed(), {ei, tr}));
      Rng rs = r.split(stream_tag::small_jumps);
      auto st = simulate_prm(sim.small_sampler(), eps, cfg.T, rs, 1.0, cfg.event_budget);
      double s = 0.0;
      for (const auto& e : st.events) s += e.z[0];
      hit[tr] = eps * s > cfg.M ? 1 : 0;
    });
    for (char h : hit) pt.exceed += h;
    pt.trials = trials;
    pt.p_hat = static_cast<double>(pt.exceed) / trials;
    if (pt.exceed > 0) pt.eps_ln_p = eps * std::log(pt.p_hat);
    pt.dominated = pt.p_hat <= std::exp(pt.chernoff / eps);
    pt.proxy_dominated = !pt.eps_ln_p || *pt.eps_ln_p <= pt.proxy;
    out.push_back(pt);
  }
  return out;
}

// =============================================================================
// Tables
// =============================================================================

inline CsvTable tail_csv(const TailReport& r) {
  CsvTable t({"u", "exact", "exact_simpson", "bound", "dominates", "asymptotic_ratio", "stated_form_ratio"});
  for (const auto& p : r.points)
    t.add({p.u, p.exact, p.exact_alt, p.bound, static_cast<long long>(p.dominates), p.asymptotic_ratio,
           p.stated_form_ratio});
  return t;
}

inline CsvTable big_jump_csv(const BigJumpReport& r, double M) {
  CsvTable t({"eps", "M", "lambda", "exact", "eps_ln_exact", "mc_p", "mc_stderr", "eps_ln_mc", "proxy", "slack",
              "dominated"});
  for (const auto& p : r.points)
    t.add({p.eps, M, p.lambda, p.exact ? *p.exact : 0.0, p.eps_ln_exact, p.mc_p, p.mc_stderr, p.eps_ln_mc, p.proxy,
           r.slack, static_cast<long long>(p.dominated)});
  return t;
}

inline CsvTable small_jump_csv(const std::vector<SmallJumpPoint>& pts, double M) {
  CsvTable t({"eps", "M", "lambda", "trials", "exceed", "p_hat", "eps_ln_p", "chernoff", "proxy",
              "neglected_variance", "dominated", "proxy_dominated"});
  for (const auto& p : pts)
    t.add({p.eps, M, p.lambda, static_cast<long long>(p.trials), static_cast<long long>(p.exceed), p.p_hat,
           p.eps_ln_p ? *p.eps_ln_p : 0.0, p.chernoff, p.proxy, p.neglected_variance,
           static_cast<long long>(p.dominated), static_cast<long long>(p.proxy_dominated)});
  return t;
}

}  // namespace levyldp
