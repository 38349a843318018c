#pragma once

// Entropy of piecewise-constant controls, the skeleton (controlled) equation
//   U' = abar(U) + int c(U,z) (g(t,z) - 1) nu(dz),
// the rate function by penalised minimisation over control grids, the
// quasi-potential and the potential height of a domain.

#include "levyldp/core.hpp"
#include "levyldp/domain.hpp"
#include "levyldp/levy.hpp"
#include "levyldp/msde.hpp"
#include "levyldp/ode.hpp"
#include "levyldp/parallel.hpp"
#include "levyldp/prm.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace levyldp {

// =============================================================================
// Entropy
// =============================================================================

/// g ln g - g + 1 with 0 ln 0 = 0.
inline double entropy_density(double g) {
  if (g == 0.0) return 1.0;
  return g * std::log(g) - g + 1.0;
}

/// Sum over (interval, cell) of dt * nu(cell) * (g ln g - g + 1). Cells are
/// intersected with the active region |z| >= delta_min.
inline double entropy(const ControlGrid& control, const LevyMeasureSpec& spec) {
  auto m = cell_masses(spec, control.cells());
  double e = 0.0;
  for (int j = 0; j < control.intervals(); ++j) {
    double dt = control.knots()[j + 1] - control.knots()[j];
    double row = 0.0;
    for (int c = 0; c < control.num_cells(); ++c) row += m[c] * entropy_density(control.at(j, c));
    e += dt * row;
  }
  return e;
}

// =============================================================================
// Skeleton equation
// =============================================================================

/// Data of the skeleton equation: averaged drift and slow jump coefficient.
struct SkeletonProblem {
  int d = 1;
  DriftFn abar;
  JumpFn c;
  LevyMeasureSpec spec;
  bool c_state_independent = false;

  static SkeletonProblem from(const AveragedSystem& s, const LevyMeasureSpec& spec) {
    return {s.d, s.abar, s.c, spec, s.c_state_independent};
  }
};

/// Per-cell integrals C_c(u) = int_cell c(u,z) nu(dz): constants when c does
/// not depend on the state, otherwise a fixed-node rule per cell.
class CellDrift {
 public:
  CellDrift(const SkeletonProblem& p, const std::vector<MarkCell>& cells) : p_(&p) {
    quad::Options opt{.rel_tol = 1e-12};
    Vec origin = Vec::Zero(p.d);
    for (const auto& cell : cells) {
      RadialRegion reg = cell_region(p.spec, cell);
      masses_.push_back(nu_mass(p.spec, reg, opt));
      if (p.c_state_independent) {
        Vec v(p.d);
        for (int i = 0; i < p.d; ++i)
          v[i] = nu_integral(p.spec, [&](const Vec& z) { return p.c(origin, z)[i]; }, reg, opt);
        constants_.push_back(v);
      } else {
        rules_.emplace_back(p.spec, reg);
      }
    }
  }

  int cells() const { return static_cast<int>(masses_.size()); }
  const std::vector<double>& masses() const { return masses_; }

  Vec cell(int c, const Vec& u) const {
    if (p_->c_state_independent) return constants_[c];
    return rules_[c].integrate([&](const Vec& z) -> Vec { return p_->c(u, z); });
  }

  /// abar(u) + sum_c (g_c - 1) C_c(u) for one row of control values.
  Vec drift(const Vec& u, const double* g) const {
    Vec f = p_->abar(u);
    for (int c = 0; c < cells(); ++c)
      if (g[c] != 1.0) f += (g[c] - 1.0) * cell(c, u);
    return f;
  }

 private:
  const SkeletonProblem* p_;
  std::vector<double> masses_;
  std::vector<Vec> constants_;
  std::vector<MarkQuadrature> rules_;
};

struct SkeletonPath {
  std::vector<double> t;
  std::vector<Vec> u;
  Vec terminal;
};

/// Integrates the skeleton equation interval by interval (the right-hand
/// side jumps at the control knots) with local tolerance `tol`; the path is
/// sampled at `samples_per_interval` points per interval.
inline SkeletonPath solve_skeleton(const SkeletonProblem& p, const ControlGrid& control, const Vec& x0, double T,
                                   double tol = 1e-10, int samples_per_interval = 16) {
  require(x0.size() == p.d, "solve_skeleton: initial state has the wrong dimension");
  require(T > 0.0 && control.horizon() >= T * (1.0 - 1e-12), "solve_skeleton: control does not cover [0, T]");
  CellDrift cd(p, control.cells());
  SkeletonPath out;
  Eigen::VectorXd y = x0;
  out.t.push_back(0.0);
  out.u.push_back(x0);
  ode::Options opt;
  opt.rel_tol = tol;
  opt.abs_tol = tol * 1e-2;
  for (int j = 0; j < control.intervals(); ++j) {
    double a = control.knots()[j], b = std::min(control.knots()[j + 1], T);
    if (!(b > a)) break;
    const double* g = control.values()[j].data();
    auto f = [&](double, const Eigen::VectorXd& s, Eigen::VectorXd& ds) { ds = cd.drift(Vec(s), g); };
    auto tr = ode::integrate(f, a, y, b, opt);
    for (int k = 1; k <= samples_per_interval; ++k) {
      double t = a + (b - a) * k / samples_per_interval;
      out.t.push_back(t);
      out.u.push_back(k == samples_per_interval ? Vec(tr.final_state()) : Vec(tr(t)));
    }
    y = tr.final_state();
  }
  out.terminal = y;
  return out;
}

// =============================================================================
// Rate function
// =============================================================================

struct ActionOptions {
  int intervals = 16;
  std::vector<MarkCell> cells;  // empty: signed bands on cell_edges
  std::vector<double> cell_edges{0.0, 0.5, 1.0, 2.0, kInf};
  std::vector<double> mu_schedule{1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7};
  int max_inner = 400;
  double feasibility_tol = 1e-4;
  double ode_tol = 1e-10;
  double max_log_step = 4.0;  // cap on one BFGS step in log-control space
  double grad_tol = 1e-6;     // inner stop: |grad|_inf <= grad_tol (1 + |F|)
  double stall_tol = 1e-10;   // inner stop: three steps with relative decrease below this

  std::vector<MarkCell> resolved_cells() const { return cells.empty() ? signed_bands(cell_edges) : cells; }
};

struct ActionResult {
  std::optional<double> value;  // nullopt: infeasible at the optimizer budget
  double entropy = 0.0;
  double violation = 0.0;
  Vec terminal;
  ControlGrid control;
  int iterations = 0;
  int evaluations = 0;
  std::vector<double> trace;  // penalised objective after each outer step
};

namespace detail {

/// Penalised objective over log-controls with exact gradients from the
/// forward sensitivity equations S' = J S + 1_{t in I_j} C_c(U).
class PenaltyObjective {
 public:
  PenaltyObjective(const SkeletonProblem& p, const ControlGrid& shape, const Vec& x0, std::vector<double> obs_t,
                   std::vector<Vec> targets, std::vector<double> weights, double tol)
      : p_(&p),
        shape_(shape),
        cd_(p, shape.cells()),
        x0_(x0),
        obs_t_(std::move(obs_t)),
        targets_(std::move(targets)),
        weights_(std::move(weights)),
        tol_(tol) {
    m_ = shape.intervals();
    nc_ = shape.num_cells();
    P_ = m_ * nc_;
    // Breakpoints: control knots and observation times.
    std::vector<double> bp = shape.knots();
    bp.insert(bp.end(), obs_t_.begin(), obs_t_.end());
    std::sort(bp.begin(), bp.end());
    T_ = *std::max_element(obs_t_.begin(), obs_t_.end());
    for (double t : bp)
      if (t <= T_ * (1.0 + 1e-14) && (breaks_.empty() || t > breaks_.back() + 1e-14 * std::max(1.0, T_)))
        breaks_.push_back(std::min(t, T_));
  }

  int size() const { return P_; }
  const CellDrift& cell_drift() const { return cd_; }
  double horizon() const { return T_; }

  struct Eval {
    double F = 0.0, E = 0.0, violation = 0.0;
    Eigen::VectorXd grad;
    std::vector<Vec> observed;
  };

  Eval operator()(const Eigen::VectorXd& u, double mu, bool want_grad = true) const {
    const int d = p_->d;
    Eigen::VectorXd g = u.array().exp();
    Eval ev;
    ev.grad = Eigen::VectorXd::Zero(P_);
    // entropy and its gradient
    for (int j = 0; j < m_; ++j) {
      double dt = shape_.knots()[j + 1] - shape_.knots()[j];
      for (int c = 0; c < nc_; ++c) {
        int k = j * nc_ + c;
        double m = cd_.masses()[c];
        ev.E += dt * m * entropy_density(g[k]);
        ev.grad[k] += dt * m * g[k] * u[k];
      }
    }
    // state and sensitivities
    const int n = want_grad ? d + d * P_ : d;
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
    y.head(d) = x0_;
    ode::Options opt;
    opt.rel_tol = tol_;
    opt.abs_tol = tol_ * 1e-2;
    std::vector<Eigen::VectorXd> snap;
    std::size_t next_obs = 0;
    std::vector<double> gj(nc_);
    for (std::size_t b = 0; b + 1 < breaks_.size(); ++b) {
      double a = breaks_[b], e = breaks_[b + 1];
      int j = shape_.interval_of(0.5 * (a + e));
      for (int c = 0; c < nc_; ++c) gj[c] = g[j * nc_ + c];
      auto f = [&](double, const Eigen::VectorXd& s, Eigen::VectorXd& ds) {
        ds.resize(n);
        Vec U = s.head(d);
        Vec fU = cd_.drift(U, gj.data());
        ds.head(d) = fU;
        if (!want_grad) return;
        // Jacobian of the drift by central differences
        Mat J(d, d);
        for (int i = 0; i < d; ++i) {
          double hstep = 1e-6 * std::max(1.0, std::abs(U[i]));
          Vec up = U, dn = U;
          up[i] += hstep;
          dn[i] -= hstep;
          J.col(i) = (cd_.drift(up, gj.data()) - cd_.drift(dn, gj.data())) / (2.0 * hstep);
        }
        // columns of later intervals are still zero
        const int live = (j + 1) * nc_;
        for (int k = 0; k < live; ++k) ds.segment(d + k * d, d) = J * s.segment(d + k * d, d);
        ds.tail(n - d - live * d).setZero();
        for (int c = 0; c < nc_; ++c) ds.segment(d + (j * nc_ + c) * d, d) += cd_.cell(c, U);
      };
      y = ode::integrate(f, a, y, e, opt).final_state();
      while (next_obs < obs_t_.size() && std::abs(obs_t_[next_obs] - e) <= 1e-12 * std::max(1.0, T_)) {
        snap.push_back(y);
        ++next_obs;
      }
    }
    require(snap.size() == obs_t_.size(), "rate_function: observation times must lie on [0, T]");
    double pen = 0.0;
    for (std::size_t k = 0; k < snap.size(); ++k) {
      Vec U = snap[k].head(d);
      Vec r = U - targets_[k];
      ev.observed.push_back(U);
      pen += weights_[k] * r.squaredNorm();
      ev.violation = std::max(ev.violation, r.norm());
      if (want_grad)
        for (int q = 0; q < P_; ++q)
          ev.grad[q] += 2.0 / mu * weights_[k] * r.dot(Vec(snap[k].segment(d + q * d, d))) * g[q];
    }
    ev.F = ev.E + pen / mu;
    return ev;
  }

 private:
  const SkeletonProblem* p_;
  ControlGrid shape_;
  CellDrift cd_;
  Vec x0_;
  std::vector<double> obs_t_;
  std::vector<Vec> targets_;
  std::vector<double> weights_;
  double tol_;
  int m_ = 0, nc_ = 0, P_ = 0;
  double T_ = 0.0;
  std::vector<double> breaks_;
};

/// BFGS with Armijo backtracking; returns the number of iterations.
inline int bfgs(const PenaltyObjective& obj, Eigen::VectorXd& u, double mu, const ActionOptions& opt, int& evals) {
  const int P = obj.size();
  Mat H = Mat::Identity(P, P);
  auto cur = obj(u, mu);
  ++evals;
  int stall = 0, it = 0;
  for (; it < opt.max_inner; ++it) {
    double gnorm = cur.grad.lpNorm<Eigen::Infinity>();
    if (gnorm <= opt.grad_tol * (1.0 + std::abs(cur.F))) break;
    Eigen::VectorXd dir = -H * cur.grad;
    double slope = cur.grad.dot(dir);
    if (!(slope < 0.0)) {
      H.setIdentity();
      dir = -cur.grad;
      slope = -cur.grad.squaredNorm();
    }
    double step_cap = dir.lpNorm<Eigen::Infinity>();
    double alpha = step_cap > opt.max_log_step ? opt.max_log_step / step_cap : 1.0;
    PenaltyObjective::Eval trial;
    Eigen::VectorXd un;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      un = u + alpha * dir;
      trial = obj(un, mu);
      ++evals;
      if (std::isfinite(trial.F) && trial.F <= cur.F + 1e-4 * alpha * slope) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      if (H.isIdentity()) break;
      H.setIdentity();
      continue;
    }
    Eigen::VectorXd s = un - u, yv = trial.grad - cur.grad;
    double sy = s.dot(yv);
    double dF = cur.F - trial.F;
    u = un;
    cur = trial;
    if (sy > 1e-12 * s.norm() * yv.norm()) {
      double rho = 1.0 / sy;
      Mat I = Mat::Identity(P, P);
      H = (I - rho * s * yv.transpose()) * H * (I - rho * yv * s.transpose()) + rho * s * s.transpose();
    }
    stall = dF <= opt.stall_tol * std::max(1.0, std::abs(cur.F)) ? stall + 1 : 0;
    if (stall >= 3) break;
  }
  return it;
}

inline ActionResult minimise(const SkeletonProblem& p, const Vec& x0, double T, std::vector<double> obs_t,
                             std::vector<Vec> targets, std::vector<double> weights, const ActionOptions& opt) {
  require(T > 0.0, "rate_function: horizon must be > 0");
  require(opt.intervals >= 1, "rate_function: need at least one control interval");
  require(!opt.mu_schedule.empty(), "rate_function: empty penalty schedule");
  ControlGrid shape = ControlGrid::uniform(T, opt.intervals, opt.resolved_cells(), 1.0);
  PenaltyObjective obj(p, shape, x0, std::move(obs_t), std::move(targets), std::move(weights), opt.ode_tol);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(obj.size());
  ActionResult res;
  for (double mu : opt.mu_schedule) {
    res.iterations += bfgs(obj, u, mu, opt, res.evaluations);
    res.trace.push_back(obj(u, mu, false).F);
  }
  auto fin = obj(u, opt.mu_schedule.back(), false);
  for (int j = 0; j < shape.intervals(); ++j)
    for (int c = 0; c < shape.num_cells(); ++c) shape.at(j, c) = std::exp(u[j * shape.num_cells() + c]);
  res.control = shape;
  res.entropy = fin.E;
  res.violation = fin.violation;
  res.terminal = fin.observed.back();
  if (fin.violation <= opt.feasibility_tol) {
    res.value = fin.E;
    res.control.set_level(fin.E);
  }
  return res;
}

}  // namespace detail

/// Endpoint mode: inf of the entropy over control grids steering x0 to
/// `target` at time T.
inline ActionResult rate_function(const SkeletonProblem& p, const Vec& x0, const Vec& target, double T,
                                  const ActionOptions& opt = {}) {
  require(x0.size() == p.d && target.size() == p.d, "rate_function: dimension mismatch");
  return detail::minimise(p, x0, T, {T}, {target}, {1.0}, opt);
}

/// Path mode: the skeleton path must pass through `states[k]` at `times[k]`
/// (mean-square penalty over the observation times).
inline ActionResult rate_function_path(const SkeletonProblem& p, const Vec& x0, const std::vector<double>& times,
                                       const std::vector<Vec>& states, const ActionOptions& opt = {}) {
  require(!times.empty() && times.size() == states.size(), "rate_function_path: need matching times and states");
  for (std::size_t k = 0; k < times.size(); ++k)
    require(times[k] > 0.0 && (k == 0 || times[k] > times[k - 1]), "rate_function_path: times must increase from > 0");
  std::vector<double> w(times.size(), 1.0 / static_cast<double>(times.size()));
  return detail::minimise(p, x0, times.back(), times, states, w, opt);
}

// =============================================================================
// Quasi-potential
// =============================================================================

struct QuasiPotentialResult {
  Vec x, z;
  std::optional<double> value;  // nullopt: every horizon infeasible
  double T_star = 0.0;
  ControlGrid control;
  std::vector<double> horizons;
  std::vector<std::optional<double>> per_horizon;
  bool at_largest_horizon = false;  // the minimum sits on the edge of the horizon grid
};

/// V(x, z) = min over T in T_grid of the endpoint rate function. V(x, x) = 0
/// with T* = 0 and the identity control.
inline QuasiPotentialResult quasi_potential(const SkeletonProblem& p, const Vec& x, const Vec& z,
                                            const std::vector<double>& T_grid, const ActionOptions& opt = {},
                                            int workers = 1) {
  require(!T_grid.empty(), "quasi_potential: empty horizon grid");
  QuasiPotentialResult out;
  out.x = x;
  out.z = z;
  out.horizons = T_grid;
  if ((z - x).norm() == 0.0) {
    out.value = 0.0;
    out.control = ControlGrid::constant(1.0, 1.0, opt.resolved_cells());
    out.per_horizon.assign(T_grid.size(), 0.0);
    return out;
  }
  std::vector<ActionResult> rs(T_grid.size());
  parallel_for(T_grid.size(), workers, [&](std::size_t i) { rs[i] = rate_function(p, x, z, T_grid[i], opt); });
  double Tmax = *std::max_element(T_grid.begin(), T_grid.end());
  for (std::size_t i = 0; i < T_grid.size(); ++i) {
    out.per_horizon.push_back(rs[i].value);
    if (rs[i].value && (!out.value || *rs[i].value < *out.value)) {
      out.value = rs[i].value;
      out.T_star = T_grid[i];
      out.control = rs[i].control;
    }
  }
  out.at_largest_horizon = out.value && out.T_star == Tmax && T_grid.size() > 1;
  return out;
}

struct PotentialHeight {
  std::vector<BoundaryNode> nodes;
  std::vector<Vec> targets;  // nodes pushed outward by the offset
  std::vector<QuasiPotentialResult> per_node;
  std::optional<double> value;
  std::size_t argmin = 0;
  Vec z_star;
};

/// Vbar = min over boundary nodes of V(0, node + offset * diam(D) * normal).
/// Throws if abar fails to point inward at a node.
inline PotentialHeight potential_height(const SkeletonProblem& p, const Domain& D, const std::vector<double>& T_grid,
                                        const ActionOptions& opt = {}, double offset_fraction = 0.05,
                                        int boundary_nodes = 32, int workers = 1) {
  require(D.dim() == p.d, "potential_height: domain and system dimensions differ");
  PotentialHeight out;
  out.nodes = D.boundary_nodes(boundary_nodes);
  for (std::size_t i = 0; i < out.nodes.size(); ++i) {
    const auto& nd = out.nodes[i];
    double flux = p.abar(nd.point).dot(nd.normal);
    if (!(flux < 0.0))
      throw InvalidArgument("averaged drift is not inward-pointing at boundary node " + std::to_string(i) +
                            " (<abar, n> = " + std::to_string(flux) + ")");
    out.targets.push_back(nd.point + offset_fraction * D.diameter() * nd.normal);
  }
  out.per_node.resize(out.nodes.size());
  Vec origin = Vec::Zero(p.d);
  parallel_for(out.nodes.size(), workers,
               [&](std::size_t i) { out.per_node[i] = quasi_potential(p, origin, out.targets[i], T_grid, opt); });
  for (std::size_t i = 0; i < out.nodes.size(); ++i) {
    const auto& v = out.per_node[i].value;
    if (v && (!out.value || *v < *out.value)) {
      out.value = v;
      out.argmin = i;
    }
  }
  if (out.value) out.z_star = out.targets[out.argmin];
  return out;
}

}  // namespace levyldp
