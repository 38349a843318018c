#pragma once

// Jump-adapted Euler integrators for the slow-fast system
//
//   dX = a(X,Y) dt + eps * int c(X-,z) Ntilde(dt,dz)
//   dY = (1/eps) f(X,Y) dt + int h(X-,Y-,z) Ntilde(dt,dz)
//
// where Ntilde is the compensated Poisson random measure with intensity
// (1/eps) nu(dz) dt, for its controlled version driven by N^{g/eps}, for the
// averaged equation, and for the block-frozen auxiliary processes.

#include "levyldp/core.hpp"
#include "levyldp/levy.hpp"
#include "levyldp/prm.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace levyldp {

using SlowFastFn = std::function<Vec(const Vec& x, const Vec& y)>;
using JumpFn = std::function<Vec(const Vec& x, const Vec& z)>;
using FastJumpFn = std::function<Vec(const Vec& x, const Vec& y, const Vec& z)>;
using DriftFn = std::function<Vec(const Vec& x)>;

struct SystemCoefficients {
  std::string name;
  int d = 1;  // slow (and mark) dimension
  int k = 1;  // fast dimension
  SlowFastFn a;
  JumpFn c;
  SlowFastFn f;
  FastJumpFn h;
  double L = 1.0;       // Lipschitz constant
  double Lambda = 1.0;  // |h(x,y,z)| <= Lambda |z|
  double beta1 = 1.0;   // dissipativity
  double beta2 = 1.0;
  // Structural flags that let compensators be skipped or precomputed.
  bool c_odd_in_mark = false;
  bool h_odd_in_mark = false;
  bool c_state_independent = false;
  bool h_state_independent = false;
};

// =============================================================================
// Noise
// =============================================================================

/// Everything about nu needed during integration: the active region
/// |z| >= delta_min, its mass, a mark sampler and a fixed-node rule.
/// Immutable and shareable between workers.
class JumpNoise {
 public:
  JumpNoise() = default;
  explicit JumpNoise(const LevyMeasureSpec& spec) : spec_(spec) {
    require_valid(spec);
    region_ = spec.active_region();
    mass_ = nu_mass(spec, region_);
    if (mass_ > 0.0) {
      sampler_ = std::make_shared<const MarkSampler>(spec, region_);
      quadrature_ = std::make_shared<const MarkQuadrature>(spec, region_);
    }
  }

  const LevyMeasureSpec& spec() const { return spec_; }
  const RadialRegion& region() const { return region_; }
  double mass() const { return mass_; }
  bool silent() const { return !(mass_ > 0.0); }
  std::shared_ptr<const MarkSampler> sampler() const { return sampler_; }
  const MarkQuadrature& quadrature() const { return *quadrature_; }

  /// int over the active region of g(z) nu(dz), adaptive quadrature (for precomputation).
  Vec integral(const std::function<Vec(const Vec&)>& g, int out_dim) const {
    Vec out = Vec::Zero(out_dim);
    if (silent()) return out;
    quad::Options opt{.rel_tol = 1e-12};
    for (int i = 0; i < out_dim; ++i) out[i] = nu_integral(spec_, [&](const Vec& z) { return g(z)[i]; }, region_, opt);
    return out;
  }

  /// Same integral on the fixed-node rule (for state-dependent integrands).
  Vec integral_fixed(const std::function<Vec(const Vec&)>& g, int out_dim) const {
    if (silent()) return Vec::Zero(out_dim);
    return quadrature_->integrate(g);
  }

 private:
  LevyMeasureSpec spec_;
  RadialRegion region_;
  double mass_ = 0.0;
  std::shared_ptr<const MarkSampler> sampler_;
  std::shared_ptr<const MarkQuadrature> quadrature_;
};

/// Compensator int c(x,z) nu(dz) over the active region, using the
/// cheapest exact route the coefficient flags allow.
class Compensator {
 public:
  Compensator() = default;
  Compensator(const JumpNoise* noise, std::function<Vec(const Vec& state, const Vec& z)> g, int state_dim, int out_dim,
              bool odd, bool state_independent)
      : noise_(noise), g_(std::move(g)), dim_(out_dim) {
    if (noise->silent() || (odd && noise->spec().symmetric())) {
      mode_ = Mode::zero;
    } else if (state_independent) {
      mode_ = Mode::constant;
      Vec origin = Vec::Zero(state_dim);
      constant_ = noise->integral([&](const Vec& z) { return g_(origin, z); }, dim_);
    } else {
      mode_ = Mode::quadrature;
    }
  }

  Vec operator()(const Vec& state) const {
    switch (mode_) {
      case Mode::zero: return Vec::Zero(dim_);
      case Mode::constant: return constant_;
      case Mode::quadrature: return noise_->integral_fixed([&](const Vec& z) { return g_(state, z); }, dim_);
    }
    return Vec::Zero(dim_);
  }

  bool is_zero() const { return mode_ == Mode::zero; }

 private:
  enum class Mode { zero, constant, quadrature };
  const JumpNoise* noise_ = nullptr;
  std::function<Vec(const Vec&, const Vec&)> g_;
  int dim_ = 0;
  Mode mode_ = Mode::zero;
  Vec constant_;
};

// =============================================================================
// Hypothesis checks
// =============================================================================

/// Sampled checks of the Lipschitz, growth, dissipativity and integrability
/// conditions on a box of half-width `radius`.
inline ValidationReport check_hypotheses(const SystemCoefficients& s, const JumpNoise& noise, Rng rng,
                                         int samples = 10000, double radius = 3.0) {
  ValidationReport rep;
  const double slack = 1.0 + 1e-9;
  auto rand_vec = [&](int n) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = radius * (2.0 * rng.uniform() - 1.0);
    return v;
  };
  double lip_a = 0.0, lip_f = 0.0;
  for (int i = 0; i < samples; ++i) {
    Vec x = rand_vec(s.d), xb = rand_vec(s.d), y = rand_vec(s.k), yb = rand_vec(s.k);
    double den = (x - xb).norm() + (y - yb).norm();
    if (den == 0.0) continue;
    lip_a = std::max(lip_a, (s.a(x, y) - s.a(xb, yb)).norm() / den);
    lip_f = std::max(lip_f, (s.f(x, y) - s.f(xb, yb)).norm() / den);
  }
  rep.checks.push_back({"lipschitz_a", lip_a <= s.L * slack, lip_a, lip_a <= s.L * slack ? "" : "exceeds L"});
  rep.checks.push_back({"lipschitz_f", lip_f <= s.L * slack, lip_f, lip_f <= s.L * slack ? "" : "exceeds L"});

  if (noise.silent()) {
    rep.checks.push_back({"jump_coefficients", true, 0.0, "measure has no active mass"});
  } else {
    const auto& q = noise.quadrature();
    int pairs = std::max(1, samples / 50);
    double lip_c = 0.0, lip_h = 0.0, diss = -kInf, bound_h = 0.0;
    for (int i = 0; i < pairs; ++i) {
      Vec x = rand_vec(s.d), xb = rand_vec(s.d), y = rand_vec(s.k), yb = rand_vec(s.k);
      double dx = (x - xb).norm(), dxy = dx + (y - yb).norm();
      double ic = q.integrate([&](const Vec& z) { return (s.c(x, z) - s.c(xb, z)).norm(); });
      double ih = q.integrate([&](const Vec& z) { return (s.h(x, y, z) - s.h(xb, yb, z)).norm(); });
      if (dx > 0) lip_c = std::max(lip_c, ic / dx);
      if (dxy > 0) lip_h = std::max(lip_h, ih / dxy);
      // 2<y-yb, f(x,y)-f(x,yb)> + int |h(x,y,z)-h(x,yb,z)|^2 + beta1 |y-yb|^2 - beta2 |x|^2 <= 0
      double i2 = q.integrate([&](const Vec& z) { return (s.h(x, y, z) - s.h(x, yb, z)).squaredNorm(); });
      double lhs = 2.0 * (y - yb).dot(s.f(x, y) - s.f(x, yb)) + i2;
      double rhs = -s.beta1 * (y - yb).squaredNorm() + s.beta2 * x.squaredNorm();
      diss = std::max(diss, lhs - rhs);
    }
    Rng mark_rng = rng.split(7);
    for (int i = 0; i < samples; ++i) {
      Vec x = rand_vec(s.d), y = rand_vec(s.k);
      Vec z = noise.sampler()->sample(mark_rng);
      bound_h = std::max(bound_h, s.h(x, y, z).norm() / z.norm());
    }
    rep.checks.push_back({"lipschitz_c", lip_c <= s.L * slack, lip_c, lip_c <= s.L * slack ? "" : "exceeds L"});
    rep.checks.push_back({"lipschitz_h", lip_h <= s.L * slack, lip_h, lip_h <= s.L * slack ? "" : "exceeds L"});
    rep.checks.push_back(
        {"jump_bound_h", bound_h <= s.Lambda * slack, bound_h, bound_h <= s.Lambda * slack ? "" : "exceeds Lambda"});
    bool diss_ok = diss <= 1e-9;
    rep.checks.push_back({"dissipativity", diss_ok, diss, diss_ok ? "" : "dissipativity inequality violated"});
    Vec x0 = Vec::Zero(s.d), y0 = Vec::Zero(s.k);
    double l1c = q.integrate([&](const Vec& z) { return s.c(x0, z).norm(); });
    double l1h = q.integrate([&](const Vec& z) { return s.h(x0, y0, z).norm(); });
    rep.checks.push_back({"integrability", std::isfinite(l1c) && std::isfinite(l1h), l1c + l1h, ""});
  }
  // a(0, y) = 0 makes 0 a critical point; reported only.
  double a0 = 0.0;
  for (int i = 0; i < 100; ++i) a0 = std::max(a0, s.a(Vec::Zero(s.d), rand_vec(s.k)).norm());
  rep.checks.push_back({"a_vanishes_at_origin", a0 == 0.0, a0, a0 == 0.0 ? "" : "a(0,y) != 0 (informational)", false});
  return rep;
}

// =============================================================================
// Engine
// =============================================================================

struct EngineOptions {
  double explosion_radius = 1e6;
};

struct EngineResult {
  long steps = 0;
  double t_end = 0.0;
  bool stopped = false;
};

/// Observer that never stops and records nothing.
struct NullObserver {
  bool on_jump(double, Vec&) { return false; }
  bool on_node(long, double, Vec&) { return false; }
};

/// Explicit Euler with drift steps split at the jump times of `source`.
/// Model: drift(t, s, out), jump(t, s_minus, z, out). Observer: on_jump(t, s)
/// and on_node(n, t, s) may modify the state and return true to stop.
template <class Model, class Source, class Observer>
EngineResult run_jump_euler(const Model& model, Source& source, Vec& s, double h, long n_steps, Observer& obs,
                            const EngineOptions& opt = {}) {
  EngineResult res;
  Vec dr(s.size()), dj(s.size());
  auto check = [&](double t) {
    double nrm = s.norm();
    if (!(nrm <= opt.explosion_radius)) throw PathExplosion(t, nrm, opt.explosion_radius);
  };
  std::optional<JumpEvent> next = source.next();
  double cur = 0.0;
  if (obs.on_node(0, 0.0, s)) {
    res.stopped = true;
    return res;
  }
  for (long n = 0; n < n_steps; ++n) {
    const double t_next = static_cast<double>(n + 1) * h;
    while (next && next->t <= t_next) {
      const double te = next->t;
      if (te > cur) {
        model.drift(cur, s, dr);
        s += (te - cur) * dr;
        cur = te;
      }
      model.jump(te, s, next->z, dj);
      s += dj;
      check(te);
      if (obs.on_jump(te, s)) {
        res.steps = n;
        res.t_end = te;
        res.stopped = true;
        return res;
      }
      next = source.next();
    }
    model.drift(cur, s, dr);
    s += (t_next - cur) * dr;
    cur = t_next;
    check(cur);
    if (obs.on_node(n + 1, cur, s)) {
      res.steps = n + 1;
      res.t_end = cur;
      res.stopped = true;
      return res;
    }
  }
  res.steps = n_steps;
  res.t_end = cur;
  return res;
}

// =============================================================================
// Models
// =============================================================================

/// State (x, y). Controlled and uncontrolled systems share the drift
/// a - int c dnu, (f - int h dnu)/eps: the control drift int c (g-1) dnu
/// cancels against the compensator int c g dnu of N^{g/eps}.
class MultiscaleModel {
 public:
  MultiscaleModel(const SystemCoefficients& s, const JumpNoise& noise, double eps) : s_(&s), eps_(eps) {
    const int d = s.d, k = s.k;
    comp_c_ = Compensator(
        &noise, [sp = &s, d](const Vec& st, const Vec& z) { return sp->c(st.head(d), z); }, d + k, d, s.c_odd_in_mark,
        s.c_state_independent);
    comp_h_ = Compensator(
        &noise, [sp = &s, d, k](const Vec& st, const Vec& z) { return sp->h(st.head(d), st.segment(d, k), z); }, d + k, k,
        s.h_odd_in_mark, s.h_state_independent);
  }

  int dim() const { return s_->d + s_->k; }

  void drift(double, const Vec& st, Vec& out) const {
    const int d = s_->d, k = s_->k;
    Vec x = st.head(d), y = st.segment(d, k);
    out.resize(d + k);
    Vec ax = s_->a(x, y);
    Vec fy = s_->f(x, y);
    if (!comp_c_.is_zero()) ax -= comp_c_(st);
    if (!comp_h_.is_zero()) fy -= comp_h_(st);
    out.head(d) = ax;
    out.segment(d, k) = fy / eps_;
  }

  void jump(double, const Vec& st, const Vec& z, Vec& out) const {
    const int d = s_->d, k = s_->k;
    Vec x = st.head(d), y = st.segment(d, k);
    out.resize(d + k);
    out.head(d) = eps_ * s_->c(x, z);
    out.segment(d, k) = s_->h(x, y, z);
  }

 private:
  const SystemCoefficients* s_;
  double eps_;
  Compensator comp_c_, comp_h_;
};

/// Fast process with the slow variable frozen at x, on its own time scale
/// (eps = 1): dY = f(x,Y) dt + int h(x,Y-,z) Ntilde(dt,dz).
class FrozenFastModel {
 public:
  FrozenFastModel(const SystemCoefficients& s, const JumpNoise& noise, Vec x) : s_(&s), x_(std::move(x)) {
    comp_h_ = Compensator(
        &noise, [sp = &s, xx = x_](const Vec& y, const Vec& z) { return sp->h(xx, y, z); }, s.k, s.k, s.h_odd_in_mark,
        s.h_state_independent);
  }
  void drift(double, const Vec& y, Vec& out) const {
    out = s_->f(x_, y);
    if (!comp_h_.is_zero()) out -= comp_h_(y);
  }
  void jump(double, const Vec& y, const Vec& z, Vec& out) const { out = s_->h(x_, y, z); }

 private:
  const SystemCoefficients* s_;
  Vec x_;
  Compensator comp_h_;
};

/// Averaged slow equation dX = abar(X) dt + eps int c(X-,z) Ntilde.
struct AveragedSystem {
  int d = 1;
  DriftFn abar;
  JumpFn c;
  bool c_odd_in_mark = false;
  bool c_state_independent = false;

  static AveragedSystem from(const SystemCoefficients& s, DriftFn abar) {
    return {s.d, std::move(abar), s.c, s.c_odd_in_mark, s.c_state_independent};
  }
};

class AveragedModel {
 public:
  AveragedModel(const AveragedSystem& s, const JumpNoise& noise, double eps) : s_(&s), eps_(eps) {
    comp_c_ = Compensator(
        &noise, [sp = &s](const Vec& x, const Vec& z) { return sp->c(x, z); }, s.d, s.d, s.c_odd_in_mark,
        s.c_state_independent);
  }
  void drift(double, const Vec& x, Vec& out) const {
    out = s_->abar(x);
    if (!comp_c_.is_zero()) out -= comp_c_(x);
  }
  void jump(double, const Vec& x, const Vec& z, Vec& out) const { out = eps_ * s_->c(x, z); }

 private:
  const AveragedSystem* s_;
  double eps_;
  Compensator comp_c_;
};

/// State (X, Y, Yhat, D, Xf): the base system, the block-frozen fast process
/// Yhat driven by f(Xf, .), h(Xf, ., z), the accumulated drift difference
/// D = int a(Xf, Yhat) - a(X, Y) ds (so Xhat = X + D), and the frozen slow value.
class AuxiliaryModel {
 public:
  AuxiliaryModel(const SystemCoefficients& s, const JumpNoise& noise, double eps) : base_(s, noise, eps), s_(&s), eps_(eps) {
    const int d = s.d, k = s.k;
    comp_hat_ = Compensator(
        &noise,
        [sp = &s, d, k](const Vec& st, const Vec& z) {
          return sp->h(st.segment(2 * d + 2 * k, d), st.segment(d + k, k), z);
        },
        3 * d + 2 * k, k, s.h_odd_in_mark, s.h_state_independent);
  }

  int dim() const { return 3 * s_->d + 2 * s_->k; }

  void drift(double t, const Vec& st, Vec& out) const {
    const int d = s_->d, k = s_->k;
    out.resize(dim());
    Vec base_state = st.head(d + k);
    Vec bd;
    base_.drift(t, base_state, bd);
    out.head(d + k) = bd;
    Vec x = st.head(d), y = st.segment(d, k), yh = st.segment(d + k, k), xf = st.segment(2 * d + 2 * k, d);
    Vec fh = s_->f(xf, yh);
    if (!comp_hat_.is_zero()) fh -= comp_hat_(st);
    out.segment(d + k, k) = fh / eps_;
    out.segment(d + 2 * k, d) = s_->a(xf, yh) - s_->a(x, y);
    out.segment(2 * d + 2 * k, d).setZero();
  }

  void jump(double t, const Vec& st, const Vec& z, Vec& out) const {
    const int d = s_->d, k = s_->k;
    out = Vec::Zero(dim());
    Vec bj;
    base_.jump(t, st.head(d + k), z, bj);
    out.head(d + k) = bj;
    out.segment(d + k, k) = s_->h(st.segment(2 * d + 2 * k, d), st.segment(d + k, k), z);
  }

 private:
  MultiscaleModel base_;
  const SystemCoefficients* s_;
  double eps_;
  Compensator comp_hat_;
};

// =============================================================================
// Paths
// =============================================================================

struct PathPair {
  double eps = 0.0;
  double h_step = 0.0;
  int stride = 1;  // nodes between stored states
  std::vector<double> t;
  std::vector<Vec> x;
  std::vector<Vec> y;
  std::uint64_t seed = 0;
  std::optional<JumpStream> noise;  // realized driving stream when recorded
};

struct SlowPath {
  double eps = 0.0;
  double h_step = 0.0;
  int stride = 1;
  std::vector<double> t;
  std::vector<Vec> x;
};

struct IntegratorOptions {
  double explosion_radius = 1e6;
  int record_every = 1;
  bool record_noise = false;
  double event_budget = kDefaultEventBudget;
};

namespace detail {

inline long step_count(double T, double h) {
  require(h > 0.0, "step size must be > 0");
  require(T >= 0.0, "horizon must be >= 0");
  long n = std::lround(T / h);
  require(std::abs(n * h - T) <= 1e-9 * std::max(1.0, T),
          "horizon " + std::to_string(T) + " is not a multiple of the step " + std::to_string(h));
  return n;
}

inline void check_fast_step(double h, double eps) {
  require(h <= eps / 10.0 * (1.0 + 1e-12),
          "step " + std::to_string(h) + " too large for eps=" + std::to_string(eps) + " (need h <= eps/10)");
}

struct SplitRecorder {
  int d, k, stride;
  PathPair* out;
  bool on_jump(double, Vec&) { return false; }
  bool on_node(long n, double t, Vec& s) {
    if (n % stride == 0) {
      out->t.push_back(t);
      out->x.push_back(s.head(d));
      out->y.push_back(s.segment(d, k));
    }
    return false;
  }
};

struct SlowRecorder {
  int stride;
  SlowPath* out;
  bool on_jump(double, Vec&) { return false; }
  bool on_node(long n, double t, Vec& s) {
    if (n % stride == 0) {
      out->t.push_back(t);
      out->x.push_back(s);
    }
    return false;
  }
};

template <class Model, class Observer>
EngineResult drive(const Model& model, const JumpNoise& noise, double eps, const ControlGrid* control, const Rng& rng,
                   Vec& state, double h, long n, Observer& obs, const IntegratorOptions& opt, JumpStream* record) {
  EngineOptions eo{opt.explosion_radius};
  double expected = noise.silent() ? 0.0 : noise.mass() / eps * n * h * (control ? control->sup() : 1.0);
  check_budget(expected, opt.event_budget);
  LiveJumpSource live(noise.sampler(), eps, rng, control);
  if (record) {
    record->horizon = n * h;
    record->base_rate = noise.mass() / eps;
    record->region = noise.region();
    record->thinned = control != nullptr;
    RecordingSource<LiveJumpSource> src(std::move(live), record);
    return run_jump_euler(model, src, state, h, n, obs, eo);
  }
  return run_jump_euler(model, live, state, h, n, obs, eo);
}

}  // namespace detail

inline PathPair integrate_multiscale_impl(const SystemCoefficients& s, const JumpNoise& noise, double eps,
                                          const ControlGrid* control, const Vec& x0, const Vec& y0, double T, double h,
                                          const Rng& rng, const IntegratorOptions& opt) {
  require(eps > 0.0 && eps <= 1.0, "eps must lie in (0, 1]");
  require(x0.size() == s.d && y0.size() == s.k, "initial state dimensions do not match the coefficients");
  detail::check_fast_step(h, eps);
  long n = detail::step_count(T, h);
  if (control) require(control->horizon() >= T * (1.0 - 1e-12), "control horizon shorter than the path");
  MultiscaleModel model(s, noise, eps);
  PathPair out;
  out.eps = eps;
  out.h_step = h;
  out.stride = std::max(1, opt.record_every);
  out.seed = rng.seed();
  Vec st(s.d + s.k);
  st << x0, y0;
  detail::SplitRecorder rec{s.d, s.k, out.stride, &out};
  JumpStream stream;
  detail::drive(model, noise, eps, control, rng, st, h, n, rec, opt, opt.record_noise ? &stream : nullptr);
  if (opt.record_noise) out.noise = std::move(stream);
  return out;
}

/// One path of the slow-fast system on [0, T] with step h (h <= eps/10).
inline PathPair integrate_multiscale(const SystemCoefficients& s, const JumpNoise& noise, double eps, const Vec& x0,
                                     const Vec& y0, double T, double h, const Rng& rng,
                                     const IntegratorOptions& opt = {}) {
  return integrate_multiscale_impl(s, noise, eps, nullptr, x0, y0, T, h, rng, opt);
}

/// Controlled system driven by N^{g/eps}; with g == 1 the path equals the
/// uncontrolled one for the same seed.
inline PathPair integrate_controlled(const SystemCoefficients& s, const JumpNoise& noise, double eps,
                                     const ControlGrid& control, const Vec& x0, const Vec& y0, double T, double h,
                                     const Rng& rng, const IntegratorOptions& opt = {}) {
  return integrate_multiscale_impl(s, noise, eps, &control, x0, y0, T, h, rng, opt);
}

/// Averaged equation, optionally controlled. Step h is free (no fast scale).
inline SlowPath integrate_averaged(const AveragedSystem& s, const JumpNoise& noise, double eps,
                                   const ControlGrid* control, const Vec& x0, double T, double h, const Rng& rng,
                                   const IntegratorOptions& opt = {}) {
  require(eps > 0.0 && eps <= 1.0, "eps must lie in (0, 1]");
  long n = detail::step_count(T, h);
  if (control) require(control->horizon() >= T * (1.0 - 1e-12), "control horizon shorter than the path");
  AveragedModel model(s, noise, eps);
  SlowPath out;
  out.eps = eps;
  out.h_step = h;
  out.stride = std::max(1, opt.record_every);
  Vec st = x0;
  detail::SlowRecorder rec{out.stride, &out};
  detail::drive(model, noise, eps, control, rng, st, h, n, rec, opt, nullptr);
  return out;
}

struct AuxiliaryPath {
  double delta = 0.0;
  long block_steps = 0;
  std::vector<double> t;
  std::vector<Vec> x, y;          // base system, recomputed on the replayed noise
  std::vector<Vec> x_hat, y_hat;  // auxiliary processes
};

/// Khasminskii block length eps^gamma |ln eps|^p.
inline double khasminskii_delta(double eps, double gamma = 0.3, double p = 1.0) {
  require(gamma > 0.0 && gamma < 0.5 && p > 0.0, "khasminskii_delta: need gamma in (0, 1/2) and p > 0");
  return std::pow(eps, gamma) * std::pow(std::abs(std::log(eps)), p);
}

/// Auxiliary pair on blocks of length delta (rounded to a whole number of
/// steps) replaying the noise recorded in `base`.
inline AuxiliaryPath integrate_auxiliary(const SystemCoefficients& s, const JumpNoise& noise, double eps, double delta,
                                         const PathPair& base, const IntegratorOptions& opt = {}) {
  require(base.noise.has_value(), "integrate_auxiliary: base path must record its noise");
  require(!base.x.empty(), "integrate_auxiliary: empty base path");
  const double h = base.h_step;
  require(delta >= h, "block length " + std::to_string(delta) + " is smaller than the step " + std::to_string(h));
  const int d = s.d, k = s.k;
  long n = detail::step_count(base.noise->horizon, h);
  AuxiliaryPath out;
  out.delta = delta;
  out.block_steps = std::max(1L, std::lround(delta / h));
  AuxiliaryModel model(s, noise, eps);
  Vec st(3 * d + 2 * k);
  st << base.x.front(), base.y.front(), base.y.front(), Vec::Zero(d), base.x.front();
  struct Obs {
    int d, k, stride;
    long block;
    AuxiliaryPath* out;
    bool on_jump(double, Vec&) { return false; }
    bool on_node(long n, double t, Vec& s) {
      if (n % block == 0) {
        s.segment(d + k, k) = s.segment(d, k);
        s.segment(2 * d + 2 * k, d) = s.head(d);
      }
      if (n % stride == 0) {
        out->t.push_back(t);
        out->x.push_back(s.head(d));
        out->y.push_back(s.segment(d, k));
        out->y_hat.push_back(s.segment(d + k, k));
        out->x_hat.push_back(s.head(d) + s.segment(d + 2 * k, d));
      }
      return false;
    }
  } obs{d, k, base.stride, out.block_steps, &out};
  StreamCursor cursor(*base.noise);
  run_jump_euler(model, cursor, st, h, n, obs, EngineOptions{opt.explosion_radius});
  return out;
}

}  // namespace levyldp
