#pragma once

// Poisson random measures with intensity (1/eps) nu(dz) ds restricted to a
// region of finite mass, piecewise-constant controls on a time x mark grid,
// and controlled measures obtained by thinning a dominating stream.

#include "levyldp/core.hpp"
#include "levyldp/levy.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace levyldp {

struct JumpEvent {
  double t = 0.0;
  Vec z;
};

/// Realized marked point process on (0, horizon].
struct JumpStream {
  double horizon = 0.0;
  std::vector<JumpEvent> events;
  double base_rate = 0.0;        // nu(region) / eps
  RadialRegion region;
  double headroom = 1.0;         // intensity multiplier of the simulated stream
  bool thinned = false;

  std::size_t count_until(double t) const {
    auto it = std::upper_bound(events.begin(), events.end(), t,
                               [](double v, const JumpEvent& e) { return v < e.t; });
    return static_cast<std::size_t>(it - events.begin());
  }
};

inline constexpr double kDefaultEventBudget = 1e8;

// =============================================================================
// Control grids
// =============================================================================

/// Mark-space cell: r_lo <= |z| < r_hi on the half space sign(z_1) = side
/// (side 0 covers both halves).
struct MarkCell {
  double r_lo = 0.0;
  double r_hi = kInf;
  int side = 0;

  bool contains(const Vec& z) const {
    double r = z.norm();
    if (r < r_lo || !(r < r_hi)) return false;
    if (side == 0) return true;
    int s = z[0] >= 0.0 ? 1 : -1;
    return s == side;
  }
};

/// Cells |z| in [e_i, e_{i+1}) for each sign of z_1.
inline std::vector<MarkCell> signed_bands(const std::vector<double>& edges) {
  require(edges.size() >= 2 && edges.front() == 0.0 && std::isinf(edges.back()),
          "signed_bands: edges must run from 0 to infinity");
  std::vector<MarkCell> cells;
  for (int side : {-1, 1})
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) cells.push_back({edges[i], edges[i + 1], side});
  return cells;
}

/// Cells |z| in [e_i, e_{i+1}) covering all directions.
inline std::vector<MarkCell> radial_bands(const std::vector<double>& edges) {
  require(edges.size() >= 2 && edges.front() == 0.0 && std::isinf(edges.back()),
          "radial_bands: edges must run from 0 to infinity");
  std::vector<MarkCell> cells;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) cells.push_back({edges[i], edges[i + 1], 0});
  return cells;
}

/// Piecewise-constant g(t, z) = values[j][c] for t in [t_j, t_{j+1}), z in cell c.
class ControlGrid {
 public:
  ControlGrid() = default;

  ControlGrid(std::vector<double> knots, std::vector<MarkCell> cells, std::vector<std::vector<double>> values,
              double level = kInf)
      : knots_(std::move(knots)), cells_(std::move(cells)), values_(std::move(values)), level_(level) {
    validate();
  }

  static ControlGrid constant(double T, double g, std::vector<MarkCell> cells = {{0.0, kInf, 0}}) {
    std::vector<std::vector<double>> v(1, std::vector<double>(cells.size(), g));
    return ControlGrid({0.0, T}, std::move(cells), std::move(v));
  }

  static ControlGrid uniform(double T, int intervals, std::vector<MarkCell> cells, double g = 1.0) {
    require(intervals >= 1, "ControlGrid: need at least one interval");
    std::vector<double> knots(intervals + 1);
    for (int j = 0; j <= intervals; ++j) knots[j] = T * j / intervals;
    knots.back() = T;
    std::vector<std::vector<double>> v(intervals, std::vector<double>(cells.size(), g));
    return ControlGrid(std::move(knots), std::move(cells), std::move(v));
  }

  double horizon() const { return knots_.back(); }
  int intervals() const { return static_cast<int>(values_.size()); }
  int num_cells() const { return static_cast<int>(cells_.size()); }
  const std::vector<double>& knots() const { return knots_; }
  const std::vector<MarkCell>& cells() const { return cells_; }
  const std::vector<std::vector<double>>& values() const { return values_; }
  double level() const { return level_; }
  void set_level(double m) { level_ = m; }

  double& at(int j, int c) { return values_.at(j).at(c); }
  double at(int j, int c) const { return values_.at(j).at(c); }

  int interval_of(double t) const {
    require(t >= knots_.front() - 1e-12 && t <= knots_.back() + 1e-12,
            "control evaluated at t=" + std::to_string(t) + " outside its horizon [0, " +
                std::to_string(knots_.back()) + "]");
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    int j = static_cast<int>(it - knots_.begin()) - 1;
    return std::clamp(j, 0, intervals() - 1);
  }

  int cell_of(const Vec& z) const {
    for (int c = 0; c < num_cells(); ++c)
      if (cells_[c].contains(z)) return c;
    return -1;
  }

  double value(double t, const Vec& z) const {
    int c = cell_of(z);
    return c < 0 ? 1.0 : values_[interval_of(t)][c];
  }

  double sup() const {
    double s = 0.0;
    for (const auto& row : values_)
      for (double v : row) s = std::max(s, v);
    return s;
  }

  bool is_identity() const {
    for (const auto& row : values_)
      for (double v : row)
        if (v != 1.0) return false;
    return true;
  }

 private:
  void validate() const {
    require(knots_.size() >= 2, "ControlGrid: need at least two time knots");
    require(knots_.front() == 0.0, "ControlGrid: first knot must be 0");
    for (std::size_t i = 1; i < knots_.size(); ++i)
      require(knots_[i] > knots_[i - 1], "ControlGrid: time knots must be strictly increasing");
    require(values_.size() + 1 == knots_.size(), "ControlGrid: one row of values per time interval");
    for (const auto& row : values_) {
      require(row.size() == cells_.size(), "ControlGrid: one value per mark cell");
      for (double v : row) require(v >= 0.0 && std::isfinite(v), "ControlGrid: control values must be finite and >= 0");
    }
    // Cells must tile [0, inf) on each half space.
    for (int side : {-1, 1}) {
      std::vector<std::pair<double, double>> iv;
      for (const auto& c : cells_)
        if (c.side == 0 || c.side == side) iv.emplace_back(c.r_lo, c.r_hi);
      std::sort(iv.begin(), iv.end());
      double reach = 0.0;
      for (auto [lo, hi] : iv) {
        require(lo == reach, "ControlGrid: mark cells must partition [0, inf) without gaps or overlaps");
        require(hi > lo, "ControlGrid: empty mark cell");
        reach = hi;
      }
      require(std::isinf(reach), "ControlGrid: mark cells must extend to infinity");
    }
  }

  std::vector<double> knots_;
  std::vector<MarkCell> cells_;
  std::vector<std::vector<double>> values_;
  double level_ = kInf;
};

/// Region of `cell` intersected with the active region |z| >= delta_min.
inline RadialRegion cell_region(const LevyMeasureSpec& spec, const MarkCell& cell) {
  double lo = std::max(cell.r_lo, spec.delta_min);
  return {lo, std::max(lo, cell.r_hi), cell.side};
}

inline std::vector<double> cell_masses(const LevyMeasureSpec& spec, const std::vector<MarkCell>& cells) {
  std::vector<double> m;
  quad::Options opt{.rel_tol = 1e-13};
  for (const auto& c : cells) m.push_back(nu_mass(spec, cell_region(spec, c), opt));
  return m;
}

// =============================================================================
// Simulation
// =============================================================================

namespace detail {
inline void check_budget(double expected, double budget) {
  if (expected > budget)
    throw InvalidArgument("expected event count " + std::to_string(expected) + " exceeds the budget of " +
                          std::to_string(budget) + "; increase eps, shorten the horizon or raise delta_min");
}
}  // namespace detail

/// Stream at intensity headroom * nu|_region / eps, drawn from `rng`.
inline JumpStream simulate_prm(const MarkSampler& sampler, double eps, double T, Rng& rng, double headroom = 1.0,
                               double budget = kDefaultEventBudget) {
  require(eps > 0.0, "simulate_prm: eps must be > 0");
  require(T >= 0.0, "simulate_prm: horizon must be >= 0");
  JumpStream s;
  s.horizon = T;
  s.region = sampler.region();
  s.base_rate = sampler.mass() / eps;
  s.headroom = headroom;
  double rate = headroom * s.base_rate;
  if (T == 0.0 || rate == 0.0) return s;
  detail::check_budget(rate * T, budget);
  double t = 0.0;
  for (;;) {
    t += rng.exponential(rate);
    if (t > T) break;
    s.events.push_back({t, sampler.sample(rng)});
  }
  return s;
}

inline JumpStream simulate_prm(const LevyMeasureSpec& spec, double eps, double T, const RadialRegion& region,
                               Rng& rng, double budget = kDefaultEventBudget) {
  if (T == 0.0) {
    JumpStream s;
    s.region = region;
    s.base_rate = nu_mass(spec, region) / eps;
    return s;
  }
  MarkSampler sampler(spec, region);
  return simulate_prm(sampler, eps, T, rng, 1.0, budget);
}

/// Keeps each event (t, z) with probability g(t, z) / headroom.
inline JumpStream thin_to_control(const JumpStream& stream, const ControlGrid& control, double /*eps*/, Rng& rng) {
  double gmax = control.sup();
  require(gmax <= stream.headroom * (1.0 + 1e-12),
          "thin_to_control: control exceeds the headroom of the dominating stream (sup g = " + std::to_string(gmax) +
              ", headroom = " + std::to_string(stream.headroom) + ")");
  JumpStream out;
  out.horizon = stream.horizon;
  out.region = stream.region;
  out.base_rate = stream.base_rate;
  out.headroom = stream.headroom;
  out.thinned = true;
  if (gmax == 0.0) return out;
  for (const auto& e : stream.events) {
    double u = rng.uniform();
    if (u * stream.headroom < control.value(e.t, e.z)) out.events.push_back(e);
  }
  return out;
}

/// Realization of N^{g/eps}: dominating stream at rate sup(g) nu / eps from
/// the `events` child of `rng`, thinned with the `thinning` child.
inline JumpStream simulate_controlled_prm(const MarkSampler& sampler, double eps, const ControlGrid& control,
                                          const Rng& rng, double budget = kDefaultEventBudget) {
  double gmax = control.sup();
  Rng ev = rng.split(stream_tag::events);
  Rng th = rng.split(stream_tag::thinning);
  JumpStream dom = simulate_prm(sampler, eps, control.horizon(), ev, gmax, budget);
  return thin_to_control(dom, control, eps, th);
}

/// Time-ordered union of two streams on the same horizon.
inline JumpStream merge_streams(const JumpStream& a, const JumpStream& b) {
  require(a.horizon == b.horizon, "merge_streams: horizons differ");
  JumpStream out;
  out.horizon = a.horizon;
  out.base_rate = a.base_rate * a.headroom + b.base_rate * b.headroom;
  out.headroom = 1.0;
  out.region = {std::min(a.region.r_min, b.region.r_min), std::max(a.region.r_max, b.region.r_max), 0};
  out.events.reserve(a.events.size() + b.events.size());
  std::merge(a.events.begin(), a.events.end(), b.events.begin(), b.events.end(), std::back_inserter(out.events),
             [](const JumpEvent& x, const JumpEvent& y) { return x.t < y.t; });
  return out;
}

/// integral of c(z) (g(t, z) - 1) nu(dz) over the active region, cell by cell.
template <class C>
Vec compensator_drift(const ControlGrid& control, C&& c_slice, const LevyMeasureSpec& spec, double t) {
  int j = control.interval_of(t);
  Vec probe = c_slice(Vec::Constant(spec.dim, 1.0));
  const int n = static_cast<int>(probe.size());
  Vec out = Vec::Zero(n);
  quad::Options opt{.rel_tol = 1e-12};
  for (int cidx = 0; cidx < control.num_cells(); ++cidx) {
    double w = control.at(j, cidx) - 1.0;
    if (w == 0.0) continue;
    RadialRegion reg = cell_region(spec, control.cells()[cidx]);
    for (int i = 0; i < n; ++i)
      out[i] += w * nu_integral(spec, [&](const Vec& z) { return c_slice(z)[i]; }, reg, opt);
  }
  return out;
}

// =============================================================================
// Event sources consumed by the integrators
// =============================================================================

/// Lazily generated (optionally thinned) stream; unbounded horizon.
class LiveJumpSource {
 public:
  LiveJumpSource(std::shared_ptr<const MarkSampler> sampler, double eps, const Rng& rng,
                 const ControlGrid* control = nullptr)
      : sampler_(std::move(sampler)),
        control_(control),
        events_(rng.split(stream_tag::events)),
        thinning_(rng.split(stream_tag::thinning)) {
    headroom_ = control_ ? control_->sup() : 1.0;
    rate_ = sampler_ ? headroom_ * (sampler_->mass() / eps) : 0.0;  // same rounding as simulate_prm
  }

  /// Next event strictly after the previous one; nullopt when the rate is zero.
  std::optional<JumpEvent> next() {
    if (!(rate_ > 0.0)) return std::nullopt;
    for (;;) {
      t_ += events_.exponential(rate_);
      Vec z = sampler_->sample(events_);
      if (!control_) return JumpEvent{t_, z};
      if (t_ > control_->horizon()) return JumpEvent{t_, z};  // beyond the horizon nothing is consumed
      double u = thinning_.uniform();
      if (u * headroom_ < control_->value(t_, z)) return JumpEvent{t_, z};
    }
  }

  double rate() const { return rate_; }

 private:
  std::shared_ptr<const MarkSampler> sampler_;
  const ControlGrid* control_;
  Rng events_;
  Rng thinning_;
  double headroom_ = 1.0;
  double rate_ = 0.0;
  double t_ = 0.0;
};

/// Replays a stored stream.
class StreamCursor {
 public:
  explicit StreamCursor(const JumpStream& s) : stream_(&s) {}
  std::optional<JumpEvent> next() {
    if (i_ >= stream_->events.size()) return std::nullopt;
    return stream_->events[i_++];
  }

 private:
  const JumpStream* stream_;
  std::size_t i_ = 0;
};

/// Records everything a live source emits up to `horizon`.
template <class Source>
class RecordingSource {
 public:
  RecordingSource(Source src, JumpStream* sink) : src_(std::move(src)), sink_(sink) {}
  std::optional<JumpEvent> next() {
    auto e = src_.next();
    if (e && sink_ && e->t <= sink_->horizon) sink_->events.push_back(*e);
    return e;
  }

 private:
  Source src_;
  JumpStream* sink_;
};

}  // namespace levyldp
