#pragma once

// Invariant measure of the frozen fast process, the averaged coefficient,
// mixing-rate estimates and averaging-principle experiments.

#include "levyldp/benchmarks.hpp"
#include "levyldp/core.hpp"
#include "levyldp/csv.hpp"
#include "levyldp/msde.hpp"
#include "levyldp/ode.hpp"
#include "levyldp/parallel.hpp"

#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace levyldp {

// =============================================================================
// Invariant measure
// =============================================================================

struct InvariantEstimate {
  Vec frozen_x;
  Vec mean;                // time average of Y
  Vec mean_stderr;
  Vec variance;            // per-component stationary variance
  Vec variance_stderr;
  Mat covariance;
  double second_moment = 0.0;  // time average of |Y|^2
  double moment_constant = 0.0;  // second_moment / (1 + |x|^2 + |y0|^2)
  Vec abar;                // time average of a(x, Y)
  Vec abar_stderr;
  long n_samples = 0;
  double burn_in = 0.0;
  bool nonstationary = false;
  std::string nonstationary_detail;
};

struct InvariantOptions {
  double T_long = 2e4;
  double burn_in = -1.0;  // negative: 20% of T_long
  double h_step = 1e-3;
  int batches = 50;
  double explosion_radius = 1e6;
};

namespace detail {

/// Node observer accumulating batch means of Y, Y_i^2, Y Y^T and a(x, Y)
/// after the burn-in.
struct InvariantAccumulator {
  const SystemCoefficients* s;
  Vec x;
  long burn_steps;
  long per_batch;
  int k, d;
  // running sums within the current batch
  Vec sy, sy2, sa;
  Mat syy;
  long count = 0;
  std::vector<Vec> by, by2, ba;
  std::vector<Mat> byy;
  Vec tot_y, tot_yy_diag;
  double tot_sq = 0.0;
  long total = 0;

  bool on_jump(double, Vec&) { return false; }
  bool on_node(long n, double, Vec& y) {
    if (n <= burn_steps) return false;
    Vec a = s->a(x, y);
    sy += y;
    sy2 += y.cwiseProduct(y);
    syy += y * y.transpose();
    sa += a;
    ++count;
    ++total;
    tot_sq += y.squaredNorm();
    if (count == per_batch) {
      double c = static_cast<double>(count);
      by.push_back(sy / c);
      by2.push_back(sy2 / c);
      byy.push_back(syy / c);
      ba.push_back(sa / c);
      sy.setZero();
      sy2.setZero();
      syy.setZero();
      sa.setZero();
      count = 0;
    }
    return false;
  }
};

inline void component_stats(const std::vector<Vec>& xs, int dim, Vec& mean, Vec& se) {
  mean = Vec::Zero(dim);
  se = Vec::Zero(dim);
  std::vector<double> col(xs.size());
  for (int i = 0; i < dim; ++i) {
    for (std::size_t b = 0; b < xs.size(); ++b) col[b] = xs[b][i];
    auto m = mean_and_stderr(col);
    mean[i] = m.mean;
    se[i] = m.stderr_;
  }
}

}  // namespace detail

/// Ergodic time averages of the frozen fast process dY = f(x,Y) dt + int h(x,Y-,z) Ntilde(dt,dz)
/// (its own time scale, intensity nu) over [burn_in, T_long].
inline InvariantEstimate estimate_invariant(const SystemCoefficients& s, const JumpNoise& noise, const Vec& x,
                                            const Vec& y0, const Rng& rng, const InvariantOptions& opt = {}) {
  require(x.size() == s.d && y0.size() == s.k, "estimate_invariant: dimension mismatch");
  require(opt.T_long > 0.0, "estimate_invariant: T_long must be > 0");
  const double burn = opt.burn_in < 0.0 ? 0.2 * opt.T_long : opt.burn_in;
  require(burn < opt.T_long, "estimate_invariant: burn-in must be shorter than T_long");
  long n = detail::step_count(opt.T_long, opt.h_step);
  long burn_steps = std::lround(burn / opt.h_step);
  long used = n - burn_steps;
  require(used >= 2L * opt.batches, "estimate_invariant: too few samples after burn-in");
  const int k = s.k, d = s.d;

  FrozenFastModel model(s, noise, x);
  detail::InvariantAccumulator acc{&s, x, burn_steps, used / opt.batches, k, d};
  acc.sy = Vec::Zero(k);
  acc.sy2 = Vec::Zero(k);
  acc.sa = Vec::Zero(d);
  acc.syy = Mat::Zero(k, k);
  Vec st = y0;
  IntegratorOptions io;
  io.explosion_radius = opt.explosion_radius;
  detail::drive(model, noise, 1.0, nullptr, rng, st, opt.h_step, n, acc, io, nullptr);

  InvariantEstimate out;
  out.frozen_x = x;
  out.burn_in = burn;
  out.n_samples = acc.total;
  detail::component_stats(acc.by, k, out.mean, out.mean_stderr);
  detail::component_stats(acc.ba, d, out.abar, out.abar_stderr);
  // Per-batch variances; their spread gives the standard error.
  std::vector<Vec> bvar;
  for (std::size_t b = 0; b < acc.by.size(); ++b) bvar.push_back(acc.by2[b] - acc.by[b].cwiseProduct(acc.by[b]));
  detail::component_stats(bvar, k, out.variance, out.variance_stderr);
  out.covariance = Mat::Zero(k, k);
  for (std::size_t b = 0; b < acc.byy.size(); ++b)
    out.covariance += (acc.byy[b] - acc.by[b] * acc.by[b].transpose()) / static_cast<double>(acc.byy.size());
  out.second_moment = acc.tot_sq / static_cast<double>(std::max<long>(acc.total, 1));
  out.moment_constant = out.second_moment / (1.0 + x.squaredNorm() + y0.squaredNorm());

  // First half versus second half of the batches.
  std::size_t nb = acc.by.size(), half = nb / 2;
  if (half >= 2) {
    std::vector<Vec> first(acc.by.begin(), acc.by.begin() + half), second(acc.by.begin() + half, acc.by.end());
    Vec m1, s1, m2, s2;
    detail::component_stats(first, k, m1, s1);
    detail::component_stats(second, k, m2, s2);
    for (int i = 0; i < k; ++i) {
      double se = std::hypot(s1[i], s2[i]);
      if (std::abs(m1[i] - m2[i]) > 5.0 * se) {
        out.nonstationary = true;
        out.nonstationary_detail = "component " + std::to_string(i) + ": half-run means " + format_double(m1[i]) +
                                   " vs " + format_double(m2[i]) + " differ by more than 5 stderr";
      }
    }
  }
  return out;
}

// =============================================================================
// Tabulated averaged coefficient
// =============================================================================

struct AbarTable {
  std::vector<Vec> nodes;
  std::vector<Vec> values;
  std::vector<Vec> stderr_;

  int dim() const { return nodes.empty() ? 0 : static_cast<int>(nodes.front().size()); }

  /// Piecewise-linear interpolation (one-dimensional tables), constant
  /// extrapolation of the end slopes.
  Vec operator()(const Vec& x) const {
    require(!nodes.empty(), "abar table is empty");
    require(dim() == 1, "abar table interpolation is only available for d = 1");
    if (nodes.size() == 1) return values.front();
    double xv = x[0];
    std::size_t i = 1;
    while (i + 1 < nodes.size() && nodes[i][0] < xv) ++i;
    double x0 = nodes[i - 1][0], x1 = nodes[i][0];
    double t = (xv - x0) / (x1 - x0);
    return (1.0 - t) * values[i - 1] + t * values[i];
  }

  DriftFn as_drift() const {
    AbarTable copy = *this;
    return [copy](const Vec& x) -> Vec { return copy(x); };
  }

  /// Largest divided difference between adjacent nodes.
  double lipschitz_bound() const {
    double L = 0.0;
    for (std::size_t i = 1; i < nodes.size(); ++i) {
      double dx = (nodes[i] - nodes[i - 1]).norm();
      if (dx > 0.0) L = std::max(L, (values[i] - values[i - 1]).norm() / dx);
    }
    return L;
  }

  CsvTable to_csv() const {
    std::vector<std::string> header;
    int d = dim();
    for (int i = 0; i < d; ++i) header.push_back("x" + std::to_string(i));
    for (int i = 0; i < d; ++i) header.push_back("abar" + std::to_string(i));
    for (int i = 0; i < d; ++i) header.push_back("stderr" + std::to_string(i));
    CsvTable t(header);
    for (std::size_t n = 0; n < nodes.size(); ++n) {
      std::vector<CsvTable::Cell> row;
      for (int i = 0; i < d; ++i) row.emplace_back(nodes[n][i]);
      for (int i = 0; i < d; ++i) row.emplace_back(values[n][i]);
      for (int i = 0; i < d; ++i) row.emplace_back(stderr_[n][i]);
      t.add(row);
    }
    return t;
  }

  void save(const std::string& path) const { to_csv().save(path); }

  static AbarTable load(const std::string& path) {
    auto [header, rows] = CsvTable::load_numeric(path);
    require(header.size() % 3 == 0 && !header.empty(), "abar table '" + path + "': expected 3d columns");
    int d = static_cast<int>(header.size() / 3);
    AbarTable t;
    for (const auto& r : rows) {
      Vec x(d), v(d), e(d);
      for (int i = 0; i < d; ++i) {
        x[i] = r[i];
        v[i] = r[d + i];
        e[i] = r[2 * d + i];
      }
      t.nodes.push_back(x);
      t.values.push_back(v);
      t.stderr_.push_back(e);
    }
    return t;
  }
};

/// Estimates abar at every node (independent child streams keyed by node index).
inline AbarTable abar_table(const SystemCoefficients& s, const JumpNoise& noise, const std::vector<Vec>& x_grid,
                            const Vec& y0, const Rng& rng, const InvariantOptions& opt = {}, int workers = 1) {
  require(!x_grid.empty(), "abar_table: x grid is empty");
  std::vector<InvariantEstimate> est(x_grid.size());
  parallel_for(x_grid.size(), workers, [&](std::size_t i) {
    try {
      est[i] = estimate_invariant(s, noise, x_grid[i], y0, rng.split(i), opt);
    } catch (const std::exception& e) {
      throw Error("abar_table: node " + std::to_string(i) + " failed: " + e.what());
    }
  });
  AbarTable t;
  for (std::size_t i = 0; i < x_grid.size(); ++i) {
    t.nodes.push_back(x_grid[i]);
    t.values.push_back(est[i].abar);
    t.stderr_.push_back(est[i].abar_stderr);
  }
  return t;
}

inline std::vector<Vec> uniform_grid_1d(double lo, double hi, int n) {
  require(n >= 1, "grid needs at least one node");
  std::vector<Vec> g;
  for (int i = 0; i < n; ++i) g.push_back(scalar_vec(n == 1 ? lo : lo + (hi - lo) * i / (n - 1)));
  return g;
}

// =============================================================================
// Averaged ODE
// =============================================================================

/// Deterministic flow x' = abar(x) with adaptive Dormand-Prince at local tolerance `tol`.
inline ode::Trajectory solve_averaged_ode(const DriftFn& abar, const Vec& x0, double T, double tol = 1e-10) {
  Eigen::VectorXd y0 = x0;
  ode::Options opt;
  opt.rel_tol = tol;
  opt.abs_tol = tol * 1e-2;
  auto f = [&](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) { dy = abar(Vec(y)); };
  return ode::integrate(f, 0.0, y0, T, opt);
}

// =============================================================================
// Mixing
// =============================================================================

struct MixingEstimate {
  std::vector<double> horizons;
  std::vector<double> alpha;
  std::vector<double> alpha_stderr;
  double slope = 0.0;  // least-squares slope of ln alpha against ln T
};

/// alpha(T) = E |T^{-1} int_0^T a(x, Y_s) ds - abar(x)|^2 / (1 + |x|^2 + |y0|^2),
/// Y the frozen fast process started at y0.
inline MixingEstimate estimate_mixing(const SystemCoefficients& s, const JumpNoise& noise, const Vec& x, const Vec& y0,
                                      const Vec& abar_x, const std::vector<double>& horizons, int replications,
                                      double h, const Rng& rng, int workers = 1) {
  require(!horizons.empty(), "estimate_mixing: no horizons");
  for (double T : horizons) require(T > 0.0, "estimate_mixing: horizons must be > 0");
  require(replications >= 2, "estimate_mixing: need at least two replications");
  const double norm = 1.0 + x.squaredNorm() + y0.squaredNorm();
  FrozenFastModel model(s, noise, x);
  MixingEstimate out;
  out.horizons = horizons;
  for (std::size_t hi = 0; hi < horizons.size(); ++hi) {
    const double T = horizons[hi];
    long n = detail::step_count(T, h);
    std::vector<double> vals(replications);
    parallel_for(static_cast<std::size_t>(replications), workers, [&](std::size_t r) {
      struct Obs {
        const SystemCoefficients* s;
        Vec x, sum;
        double h;
        long n;
        bool on_jump(double, Vec&) { return false; }
        bool on_node(long i, double, Vec& y) {
          // trapezoid on the node grid
          double w = (i == 0 || i == n) ? 0.5 * h : h;
          sum += w * s->a(x, y);
          return false;
        }
      } obs{&s, x, Vec::Zero(s.d), h, n};
      Vec st = y0;
      detail::drive(model, noise, 1.0, nullptr, Rng(derive_seed(rng.seed(), {hi, r})), st, h, n, obs, {}, nullptr);
      vals[r] = (obs.sum / T - abar_x).squaredNorm() / norm;
    });
    auto m = mean_and_stderr(vals);
    out.alpha.push_back(m.mean);
    out.alpha_stderr.push_back(m.stderr_);
  }
  if (horizons.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, nn = 0;
    for (std::size_t i = 0; i < horizons.size(); ++i) {
      if (!(out.alpha[i] > 0.0)) continue;
      double lx = std::log(horizons[i]), ly = std::log(out.alpha[i]);
      sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly, nn += 1;
    }
    if (nn >= 2) out.slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
  }
  return out;
}

// =============================================================================
// Averaging-principle experiment
// =============================================================================

struct ExceedanceEstimate {
  double eps = 0.0;
  std::size_t trials = 0;
  std::size_t exceed = 0;
  std::size_t failures = 0;  // exploded paths, excluded from the counts
  double p = 0.0;
  Interval ci;
  double median_sup = 0.0;
};

/// Reference path in the averaging experiment: the deterministic averaged
/// flow, or the averaged SDE driven by the same (thinned) jump noise.
enum class Comparator { ode, averaged_sde };

struct AveragingExperimentConfig {
  std::vector<double> eps_grid;
  Comparator comparator = Comparator::ode;  // a control always uses averaged_sde
  double delta = 0.3;
  int trials = 2000;
  Vec x0, y0;
  double T = 2.0;
  double h_factor = 0.1;  // h = h_factor * eps
  int workers = 1;
  IntegratorOptions integrator;
};

/// Per-eps estimate of P(sup_t |X^eps_t - Xbar_t| > delta). Without a control
/// the comparator is chosen by cfg.comparator; with a control it is the
/// controlled averaged SDE driven by the same thinned noise. Trial seeds are
/// derive_seed(master, {eps index, trial}).
inline std::vector<ExceedanceEstimate> averaging_experiment(const SystemCoefficients& s, const JumpNoise& noise,
                                                            const DriftFn& abar, const AveragingExperimentConfig& cfg,
                                                            const ControlGrid* control, const Rng& rng) {
  require(!cfg.eps_grid.empty(), "averaging_experiment: eps_grid is empty");
  require(cfg.trials >= 1, "averaging_experiment: trials must be >= 1");
  AveragedSystem avg = AveragedSystem::from(s, abar);
  const bool use_sde = control != nullptr || cfg.comparator == Comparator::averaged_sde;
  std::optional<ode::Trajectory> flow;
  if (!use_sde) flow = solve_averaged_ode(abar, cfg.x0, cfg.T, 1e-10);
  std::vector<ExceedanceEstimate> out;
  for (std::size_t ei = 0; ei < cfg.eps_grid.size(); ++ei) {
    const double eps = cfg.eps_grid[ei];
    const double h = cfg.h_factor * eps;
    std::vector<double> sups(cfg.trials, 0.0);
    std::vector<char> failed(cfg.trials, 0);
    parallel_for(static_cast<std::size_t>(cfg.trials), cfg.workers, [&](std::size_t tr) {
      Rng r(derive_seed(rng.seed(), {ei, tr}));
      try {
        PathPair p = control ? integrate_controlled(s, noise, eps, *control, cfg.x0, cfg.y0, cfg.T, h, r, cfg.integrator)
                             : integrate_multiscale(s, noise, eps, cfg.x0, cfg.y0, cfg.T, h, r, cfg.integrator);
        double sup = 0.0;
        if (use_sde) {
          SlowPath a = integrate_averaged(avg, noise, eps, control, cfg.x0, cfg.T, h, r, cfg.integrator);
          for (std::size_t i = 0; i < p.x.size(); ++i) sup = std::max(sup, (p.x[i] - a.x[i]).norm());
        } else {
          for (std::size_t i = 0; i < p.x.size(); ++i) sup = std::max(sup, (p.x[i] - Vec((*flow)(p.t[i]))).norm());
        }
        sups[tr] = sup;
      } catch (const PathExplosion&) {
        failed[tr] = 1;
      }
    });
    ExceedanceEstimate e;
    e.eps = eps;
    std::vector<double> ok;
    for (int tr = 0; tr < cfg.trials; ++tr) {
      if (failed[tr]) {
        ++e.failures;
        continue;
      }
      ok.push_back(sups[tr]);
      if (sups[tr] > cfg.delta) ++e.exceed;
    }
    e.trials = ok.size();
    e.p = e.trials ? static_cast<double>(e.exceed) / e.trials : 0.0;
    e.ci = wilson_interval(e.exceed, e.trials);
    e.median_sup = median(ok);
    out.push_back(e);
  }
  return out;
}

// =============================================================================
// Khasminskii diagnostics
// =============================================================================

struct KhasminskiiDiagnostics {
  double eps = 0.0;
  double delta = 0.0;
  double median_segment_sup = 0.0;  // median of sup_t |X_t - X_{t_Delta}|
  double max_mean_fast_gap = 0.0;   // sup_t E|Y_t - Yhat_t|
  double median_slow_gap = 0.0;     // median of sup_t |X_t - Xhat_t|
};

inline std::vector<KhasminskiiDiagnostics> khasminskii_diagnostics(const SystemCoefficients& s, const JumpNoise& noise,
                                                                   const std::vector<double>& eps_grid, const Vec& x0,
                                                                   const Vec& y0, double T, int trials, double gamma,
                                                                   double p, const Rng& rng, int workers = 1) {
  std::vector<KhasminskiiDiagnostics> out;
  for (std::size_t ei = 0; ei < eps_grid.size(); ++ei) {
    const double eps = eps_grid[ei], h = eps / 10.0;
    const double delta = khasminskii_delta(eps, gamma, p);
    long n = detail::step_count(T, h);
    std::vector<double> seg(trials), slow(trials);
    std::vector<std::vector<double>> gaps(trials);
    parallel_for(static_cast<std::size_t>(trials), workers, [&](std::size_t tr) {
      IntegratorOptions opt;
      opt.record_noise = true;
      PathPair base = integrate_multiscale(s, noise, eps, x0, y0, T, h, Rng(derive_seed(rng.seed(), {ei, tr})), opt);
      AuxiliaryPath aux = integrate_auxiliary(s, noise, eps, delta, base);
      double sg = 0.0, sl = 0.0;
      gaps[tr].resize(n + 1);
      for (long i = 0; i <= n; ++i) {
        long anchor = (i / aux.block_steps) * aux.block_steps;
        sg = std::max(sg, (base.x[i] - base.x[anchor]).norm());
        sl = std::max(sl, (aux.x[i] - aux.x_hat[i]).norm());
        gaps[tr][i] = (aux.y[i] - aux.y_hat[i]).norm();
      }
      seg[tr] = sg;
      slow[tr] = sl;
    });
    KhasminskiiDiagnostics dgn;
    dgn.eps = eps;
    dgn.delta = delta;
    dgn.median_segment_sup = median(seg);
    dgn.median_slow_gap = median(slow);
    for (long i = 0; i <= n; ++i) {
      double m = 0.0;
      for (int tr = 0; tr < trials; ++tr) m += gaps[tr][i];
      dgn.max_mean_fast_gap = std::max(dgn.max_mean_fast_gap, m / trials);
    }
    out.push_back(dgn);
  }
  return out;
}

// =============================================================================
// Invariant law of an OU-type fast variable
// =============================================================================

struct CfPoint {
  double xi = 0.0;
  std::complex<double> empirical;
  std::complex<double> theory;
  double discrepancy = 0.0;
  double mc_stderr = 0.0;
  double tail_bound = 0.0;  // bound on the truncated s-integral
};

/// exp(-int_0^inf psi(e^{-cs} H^T xi) ds), truncated at s* with e^{-cs*}|H^T xi| < 1e-3.
inline std::pair<std::complex<double>, double> ou_invariant_cf(const LevyMeasureSpec& spec, double c, double hscale,
                                                               double xi) {
  double eta = std::abs(hscale * xi);
  if (eta == 0.0) return {{1.0, 0.0}, 0.0};
  double s_star = std::max(0.0, std::log(eta / 1e-3) / c);
  quad::Options opt{.rel_tol = 1e-9};
  auto psi = [&](double s) { return levy_symbol(spec, scalar_vec(std::exp(-c * s) * hscale * xi), opt); };
  double re = quad::integrate([&](double s) { return psi(s).real(); }, 0.0, s_star, opt).value;
  double im = quad::integrate([&](double s) { return psi(s).imag(); }, 0.0, s_star, opt).value;
  // |psi(eta)| <= eta^2/2 int |z|^2 dnu
  double m2 = nu_integral(spec, [](const Vec& z) { return z.squaredNorm(); }, spec.active_region());
  double tail = 1e-6 * m2 / (4.0 * c);
  return {std::exp(std::complex<double>(-re, -im)), tail};
}

/// Compares the time-averaged empirical characteristic function of the fast
/// variable of a linear system frozen at x = 0 (dY = Fy Y dt + H dL with
/// Fy = -c) against the Levy-symbol formula. One-dimensional fast variable.
inline std::vector<CfPoint> invariant_cf_check(const LinearSpec& ls, const LevyMeasureSpec& spec,
                                               const std::vector<double>& xis, const Rng& rng, double T_long = 2e4,
                                               double h = 1e-2, int batches = 50) {
  require(ls.Fy.rows() == 1 && ls.H.rows() == 1 && ls.H.cols() == 1, "invariant_cf_check: scalar OU fast variable only");
  const double c = -ls.Fy(0, 0);
  require(c > 0.0, "invariant_cf_check: need Fy = -c with c > 0");
  SystemCoefficients s = linear_system("ou", ls);
  JumpNoise noise(spec);
  long n = detail::step_count(T_long, h);
  long burn = n / 10;
  long per = (n - burn) / batches;
  struct Obs {
    const std::vector<double>* xis;
    long burn, per;
    std::vector<std::complex<double>> cur;
    std::vector<std::vector<std::complex<double>>> bm;
    long count = 0;
    bool on_jump(double, Vec&) { return false; }
    bool on_node(long i, double, Vec& y) {
      if (i <= burn) return false;
      for (std::size_t j = 0; j < xis->size(); ++j) cur[j] += std::exp(std::complex<double>(0.0, (*xis)[j] * y[0]));
      if (++count == per) {
        for (auto& v : cur) v /= static_cast<double>(per);
        bm.push_back(cur);
        std::fill(cur.begin(), cur.end(), std::complex<double>(0.0, 0.0));
        count = 0;
      }
      return false;
    }
  } obs{&xis, burn, per, std::vector<std::complex<double>>(xis.size()), {}};
  FrozenFastModel model(s, noise, Vec::Zero(s.d));
  Vec st = Vec::Zero(1);
  detail::drive(model, noise, 1.0, nullptr, rng, st, h, n, obs, {}, nullptr);

  std::vector<CfPoint> out;
  for (std::size_t j = 0; j < xis.size(); ++j) {
    std::vector<double> re, im;
    for (const auto& b : obs.bm) {
      re.push_back(b[j].real());
      im.push_back(b[j].imag());
    }
    auto mr = mean_and_stderr(re), mi = mean_and_stderr(im);
    CfPoint p;
    p.xi = xis[j];
    p.empirical = {mr.mean, mi.mean};
    auto [th, tail] = ou_invariant_cf(spec, c, ls.H(0, 0), xis[j]);
    p.theory = th;
    p.tail_bound = tail;
    p.discrepancy = std::abs(p.empirical - p.theory);
    p.mc_stderr = std::hypot(mr.stderr_, mi.stderr_);
    out.push_back(p);
  }
  return out;
}

}  // namespace levyldp
