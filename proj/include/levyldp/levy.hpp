#pragma once

// Rotation-invariant Lévy measure families on R^d \ {0}, integrals against
// them, mark sampling and the Lévy symbol. A measure is described by its
// radial profile q(r) = S_{d-1} r^{d-1} rho(r) (mass per unit radius) and, in
// one dimension, an optional skew that splits mass between the two half lines.

#include "levyldp/core.hpp"
#include "levyldp/quadrature.hpp"

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace levyldp {

enum class Family { finite_density, tempered_radial, appendix_tempered };

inline std::string family_name(Family f) {
  switch (f) {
    case Family::finite_density: return "finite-density";
    case Family::tempered_radial: return "tempered-radial";
    case Family::appendix_tempered: return "appendix-tempered";
  }
  return "?";
}

inline Family parse_family(const std::string& s) {
  if (s == "finite-density" || s == "finite_density" || s == "gaussian") return Family::finite_density;
  if (s == "tempered-radial" || s == "tempered_radial") return Family::tempered_radial;
  if (s == "appendix-tempered" || s == "appendix_tempered") return Family::appendix_tempered;
  throw InvalidArgument("unknown measure family '" + s + "'");
}

/// Annulus r_min <= |z| < r_max, optionally restricted to one half space
/// (side = sign of the first mark coordinate; 0 keeps both).
struct RadialRegion {
  double r_min = 0.0;
  double r_max = kInf;
  int side = 0;
};

/// Surface area of the unit sphere in R^d (S_0 = 2 counts the two points of R^1).
inline double sphere_area(int d) {
  switch (d) {
    case 1: return 2.0;
    case 2: return 2.0 * std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi;
    default: return 2.0 * std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d);
  }
}

/// Densities:
///   finite-density     rho(z) = scale * exp(-rate |z|^2)
///   tempered-radial    rho(z) = scale * |z|^{-(d+stability_index)} exp(-|z|^2)
///   appendix-tempered  rho(z) = |z|^{-(d+beta_tail)} exp(-|z|^alpha_temper)
/// In d = 1 the density is multiplied by (1 + skew * sign z).
struct LevyMeasureSpec {
  int dim = 1;
  Family family = Family::finite_density;
  double scale = 1.0;
  double rate = 1.0;
  double stability_index = 1.0;
  double alpha_temper = 2.0;
  double beta_tail = 0.5;
  double alpha_exp = 0.5;
  double delta_min = 0.0;
  double skew = 0.0;
  bool declared_symmetric = true;

  static LevyMeasureSpec gaussian(int d = 1, double scale = 1.0, double rate = 1.0) {
    LevyMeasureSpec s;
    s.dim = d;
    s.family = Family::finite_density;
    s.scale = scale;
    s.rate = rate;
    return s;
  }

  static LevyMeasureSpec appendix(int d, double alpha, double beta, double delta_min) {
    LevyMeasureSpec s;
    s.dim = d;
    s.family = Family::appendix_tempered;
    s.alpha_temper = alpha;
    s.beta_tail = beta;
    s.delta_min = delta_min;
    return s;
  }

  bool infinite_mass() const { return family != Family::finite_density; }
  bool symmetric() const { return skew == 0.0; }

  /// Radial part of the density (before the one-dimensional skew factor).
  double radial_density(double r) const {
    if (!(r > 0.0)) return family == Family::finite_density ? scale : kInf;
    switch (family) {
      case Family::finite_density: return scale * std::exp(-rate * r * r);
      case Family::tempered_radial: return scale * std::pow(r, -(dim + stability_index)) * std::exp(-r * r);
      case Family::appendix_tempered:
        return std::pow(r, -(dim + beta_tail)) * std::exp(-std::pow(r, alpha_temper));
    }
    return 0.0;
  }

  /// Mass per unit radius, integrated over all directions.
  double radial_profile(double r) const {
    if (!(r > 0.0)) return dim == 1 && family == Family::finite_density ? 2.0 * scale : 0.0;
    return sphere_area(dim) * std::pow(r, dim - 1) * radial_density(r);
  }

  double density(const Vec& z) const {
    double r = z.norm();
    double rho = radial_density(r);
    if (dim == 1) rho *= 1.0 + skew * (z[0] > 0 ? 1.0 : (z[0] < 0 ? -1.0 : 0.0));
    return rho;
  }

  /// Fraction of the mass at a given radius lying on `side`.
  double side_fraction(int side) const {
    if (side == 0) return 1.0;
    if (dim == 1) return 0.5 * (1.0 + side * skew);
    return 0.5;
  }

  RadialRegion active_region() const { return {delta_min, kInf, 0}; }
};

// =============================================================================
// Angular rules
// =============================================================================

/// Fixed directions and weights approximating the uniform law on the sphere
/// (restricted to one half space when side != 0). Weights sum to the side
/// fraction of the mass.
struct AngularRule {
  std::vector<Vec> dirs;
  std::vector<double> weights;
};

inline AngularRule angular_rule(const LevyMeasureSpec& spec, int side) {
  AngularRule rule;
  const int d = spec.dim;
  require(side >= -1 && side <= 1, "angular_rule: side must be -1, 0 or +1");
  if (d == 1) {
    if (side >= 0) {
      rule.dirs.push_back(scalar_vec(1.0));
      rule.weights.push_back(0.5 * (1.0 + spec.skew));
    }
    if (side <= 0) {
      rule.dirs.push_back(scalar_vec(-1.0));
      rule.weights.push_back(0.5 * (1.0 - spec.skew));
    }
    return rule;
  }
  if (d == 2) {
    if (side == 0) {
      constexpr int n = 64;
      for (int j = 0; j < n; ++j) {
        double th = 2.0 * std::numbers::pi * j / n;
        Vec v(2);
        v << std::cos(th), std::sin(th);
        rule.dirs.push_back(v);
        rule.weights.push_back(1.0 / n);
      }
    } else {
      auto gl = quad::gauss_legendre(32);
      for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        double th = 0.5 * std::numbers::pi * gl.nodes[i];
        Vec v(2);
        v << side * std::cos(th), std::sin(th);
        rule.dirs.push_back(v);
        rule.weights.push_back(gl.weights[i] / 4.0);
      }
    }
    return rule;
  }
  if (d == 3) {
    auto gl = quad::gauss_legendre(16);
    constexpr int nphi = 32;
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      double u = side == 0 ? gl.nodes[i] : side * 0.5 * (gl.nodes[i] + 1.0);
      double wu = side == 0 ? 0.5 * gl.weights[i] : 0.25 * gl.weights[i];
      double s = std::sqrt(std::max(0.0, 1.0 - u * u));
      for (int j = 0; j < nphi; ++j) {
        double ph = 2.0 * std::numbers::pi * j / nphi;
        Vec v(3);
        v << u, s * std::cos(ph), s * std::sin(ph);
        rule.dirs.push_back(v);
        rule.weights.push_back(wu / nphi);
      }
    }
    return rule;
  }
  throw InvalidArgument("mark dimension " + std::to_string(d) + " unsupported (1 <= d <= 3)");
}

// =============================================================================
// Integration against nu
// =============================================================================

namespace detail {

/// Integral of g(r) q(r) dr over [r0, r1), split at r = 1 where the power-law
/// families change character.
template <class G>
double radial_integral(const LevyMeasureSpec& spec, G&& g, double r0, double r1, const quad::Options& opt) {
  auto f = [&](double r) {
    double q = spec.radial_profile(r);
    return q == 0.0 ? 0.0 : q * g(r);
  };
  double total = 0.0;
  if (r0 < 1.0) total += quad::integrate(f, r0, std::min(1.0, r1), opt).value;
  if (r1 > 1.0) total += quad::integrate(f, std::max(1.0, r0), r1, opt).value;
  return total;
}

template <class F>
double region_integral(const LevyMeasureSpec& spec, F&& integrand, const RadialRegion& region,
                       const quad::Options& opt) {
  if (!(region.r_max > region.r_min)) return 0.0;
  AngularRule ang = angular_rule(spec, region.side);
  Vec z(spec.dim);
  auto g = [&](double r) {
    double s = 0.0;
    for (std::size_t i = 0; i < ang.dirs.size(); ++i) {
      z = r * ang.dirs[i];
      s += ang.weights[i] * integrand(z);
    }
    return s;
  };
  return radial_integral(spec, g, region.r_min, region.r_max, opt);
}

inline void check_region(const LevyMeasureSpec& spec, const RadialRegion& region) {
  require(region.r_min >= 0.0 && !(region.r_max < region.r_min), "region: need 0 <= r_min <= r_max");
  if (spec.infinite_mass() && region.r_min <= 0.0 && region.r_max > region.r_min)
    throw InvalidArgument("region reaches the origin of an infinite-mass measure; restrict it to |z| >= delta_min (delta_min = " +
                          std::to_string(spec.delta_min) + ")");
}

}  // namespace detail

/// Integral of `integrand(z)` against nu over `region`. Deterministic.
template <class F>
double nu_integral(const LevyMeasureSpec& spec, F&& integrand, const RadialRegion& region,
                   const quad::Options& opt = {}) {
  detail::check_region(spec, region);
  return detail::region_integral(spec, integrand, region, opt);
}

inline double nu_mass(const LevyMeasureSpec& spec, const RadialRegion& region, const quad::Options& opt = {}) {
  detail::check_region(spec, region);
  if (!(region.r_max > region.r_min)) return 0.0;
  return spec.side_fraction(region.side) *
         detail::radial_integral(spec, [](double) { return 1.0; }, region.r_min, region.r_max, opt);
}

inline double active_mass(const LevyMeasureSpec& spec) { return nu_mass(spec, spec.active_region()); }

// =============================================================================
// Validation
// =============================================================================

struct Check {
  std::string name;
  bool passed = false;
  double value = 0.0;
  std::string detail;
  bool gating = true;  // informational checks never fail a report
};

struct ValidationReport {
  std::vector<Check> checks;

  bool ok() const {
    for (const auto& c : checks)
      if (c.gating && !c.passed) return false;
    return true;
  }
  const Check* find(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return &c;
    return nullptr;
  }
  std::vector<std::string> failed() const {
    std::vector<std::string> out;
    for (const auto& c : checks)
      if (c.gating && !c.passed) out.push_back(c.name);
    return out;
  }
};

namespace detail {

template <class F>
Check integral_check(const std::string& name, F&& compute) {
  Check c{name, false, 0.0, ""};
  try {
    c.value = compute();
    c.passed = std::isfinite(c.value);
    if (!c.passed) c.detail = "non-finite value";
  } catch (const QuadratureError& e) {
    c.value = kInf;
    c.detail = std::string("diverges: ") + e.what();
  }
  return c;
}

/// Deterministic probe radii used for pointwise density checks.
inline std::vector<double> probe_radii() {
  std::vector<double> r;
  auto gl = quad::gauss_legendre(12);
  for (double lo : {1e-3, 1e-2, 1e-1, 1.0, 2.0, 4.0})
    for (double x : gl.nodes) r.push_back(lo * (1.5 + 0.5 * x));
  return r;
}

}  // namespace detail

inline ValidationReport validate_measure(const LevyMeasureSpec& spec) {
  ValidationReport rep;
  auto param = [&](const std::string& name, bool ok, double v, const std::string& msg) {
    rep.checks.push_back({name, ok, v, ok ? "" : msg});
  };
  param("dimension", spec.dim >= 1 && spec.dim <= 3, spec.dim, "dimension must be 1, 2 or 3");
  param("alpha_exp", spec.alpha_exp > 0.0, spec.alpha_exp, "alpha_exp must be > 0");
  param("delta_min", spec.delta_min >= 0.0 && (!spec.infinite_mass() || spec.delta_min > 0.0), spec.delta_min,
        "infinite-mass family requires delta_min > 0");
  if (spec.family == Family::appendix_tempered) {
    param("alpha_temper", spec.alpha_temper > 1.0, spec.alpha_temper, "alpha_temper must be > 1");
    param("beta_tail", spec.beta_tail >= 0.0 && spec.beta_tail < 1.0, spec.beta_tail, "beta_tail must lie in [0,1)");
  }
  if (spec.family == Family::tempered_radial)
    param("stability_index", spec.stability_index > 0.0 && spec.stability_index < 2.0, spec.stability_index,
          "stability_index must lie in (0,2)");
  if (spec.family == Family::finite_density)
    param("finite_density_params", spec.scale >= 0.0 && spec.rate > 0.0, spec.rate, "need scale >= 0 and rate > 0");
  param("skew", std::abs(spec.skew) <= 1.0 && (spec.dim == 1 || spec.skew == 0.0), spec.skew,
        "skew must lie in [-1,1] and is only defined for d = 1");
  if (!rep.ok()) return rep;

  rep.checks.push_back(detail::integral_check("small_jump_moment", [&] {
    auto g = [](double r) { return std::min(1.0, r * r); };
    return quad::integrate_checked(
        [&](double r) { double q = spec.radial_profile(r); return q == 0.0 ? 0.0 : q * g(r); }, 0.0, 1.0) +
           quad::integrate_checked(
        [&](double r) { return spec.radial_profile(r); }, 1.0, kInf);
  }));
  rep.checks.push_back(detail::integral_check("exponential_moment", [&] {
    return quad::integrate_checked(
        [&](double r) {
          double q = spec.radial_profile(r);
          return q == 0.0 ? 0.0 : q * std::exp(spec.alpha_exp * r * r);
        },
        1.0, kInf);
  }));
  rep.checks.push_back(detail::integral_check("active_mass", [&] {
    if (spec.infinite_mass() && spec.delta_min <= 0.0) throw QuadratureError("delta_min = 0");
    double lo = spec.delta_min;
    auto q = [&](double r) { return spec.radial_profile(r); };
    double m = 0.0;
    if (lo < 1.0) m += quad::integrate_checked(q, lo, 1.0);
    m += quad::integrate_checked(q, std::max(lo, 1.0), kInf);
    return m;
  }));

  double residual = 0.0, family_residual = 0.0, peak = 0.0;
  AngularRule ang = angular_rule(spec, 0);
  for (double r : detail::probe_radii()) {
    for (const Vec& u : ang.dirs) {
      Vec z = r * u;
      double p = spec.density(z), m = spec.density(Vec(-z));
      residual = std::max(residual, std::abs(p - m));
      peak = std::max(peak, std::abs(p));
      if (spec.family == Family::appendix_tempered) {
        double ref = std::pow(r, -(spec.dim + spec.beta_tail)) * std::exp(-std::pow(r, spec.alpha_temper));
        if (spec.dim == 1) ref *= 1.0 + spec.skew * (z[0] > 0 ? 1.0 : -1.0);
        family_residual = std::max(family_residual, std::abs(p - ref) / std::max(ref, 1e-300));
      }
    }
  }
  bool sym_ok = !spec.declared_symmetric || residual <= 1e-12 * std::max(1.0, peak);
  rep.checks.push_back({"symmetry", sym_ok, residual, sym_ok ? "" : "density declared symmetric but rho(z) != rho(-z)"});
  // Marks below delta_min are dropped; for a skewed infinite-activity measure
  // that also drops their (nonzero) mean from the compensated drift.
  bool trunc_ok = !(spec.infinite_mass() && !spec.symmetric());
  rep.checks.push_back({"asymmetric_truncation", trunc_ok, spec.skew,
                        trunc_ok ? "" : "skewed infinite-activity measure: truncation below delta_min biases the drift",
                        false});
  if (spec.family == Family::appendix_tempered)
    rep.checks.push_back({"family_density", family_residual <= 1e-12, family_residual,
                          family_residual <= 1e-12 ? "" : "density deviates from |z|^-(d+beta) exp(-|z|^alpha)"});
  return rep;
}

/// Throws InvalidArgument listing failed checks.
inline void require_valid(const LevyMeasureSpec& spec) {
  auto rep = validate_measure(spec);
  if (rep.ok()) return;
  std::string msg = "invalid Levy measure, failed checks:";
  for (const auto& c : rep.checks)
    if (c.gating && !c.passed) msg += " " + c.name + (c.detail.empty() ? "" : " (" + c.detail + ")");
  throw InvalidArgument(msg);
}

// =============================================================================
// Lévy symbol
// =============================================================================

/// psi(xi) = integral of (1 - exp(i<xi,z>) + i<xi,z>) nu(dz).
inline std::complex<double> levy_symbol(const LevyMeasureSpec& spec, const Vec& xi, const quad::Options& opt = {}) {
  require(xi.size() == spec.dim, "levy_symbol: frequency dimension mismatch");
  if (xi.norm() == 0.0) return {0.0, 0.0};
  RadialRegion all{0.0, kInf, 0};
  double re = detail::region_integral(
      spec,
      [&](const Vec& z) {
        double t = xi.dot(z);
        // 1 - cos t, written to avoid cancellation for small t
        double s = std::sin(0.5 * t);
        return 2.0 * s * s;
      },
      all, opt);
  double im = detail::region_integral(
      spec,
      [&](const Vec& z) {
        double t = xi.dot(z);
        return std::abs(t) < 1e-4 ? t * t * t / 6.0 * (1.0 - t * t / 20.0) : t - std::sin(t);
      },
      all, opt);
  return {re, im};
}

// =============================================================================
// Fixed-node rule for repeated state-dependent integrals
// =============================================================================

/// Nodes z_i and weights w_i with sum_i w_i g(z_i) ~ integral of g over a region.
/// Used where the integrand depends on a changing state and adaptive
/// quadrature per evaluation would be too slow.
class MarkQuadrature {
 public:
  MarkQuadrature() = default;

  MarkQuadrature(const LevyMeasureSpec& spec, const RadialRegion& region, int panels = 24, int order = 8) {
    detail::check_region(spec, region);
    if (!(region.r_max > region.r_min)) return;
    double r0 = region.r_min;
    double r1 = region.r_max;
    if (!std::isfinite(r1)) r1 = tail_cap(spec, r0);
    std::vector<double> edges(panels + 1);
    bool geometric = r0 > 0.0 && r1 / r0 > 10.0;
    for (int i = 0; i <= panels; ++i) {
      double t = static_cast<double>(i) / panels;
      edges[i] = geometric ? r0 * std::pow(r1 / r0, t) : r0 + (r1 - r0) * t;
    }
    auto gl = quad::gauss_legendre(order);
    AngularRule ang = angular_rule(spec, region.side);
    for (int p = 0; p < panels; ++p) {
      double a = edges[p], b = edges[p + 1];
      for (int i = 0; i < order; ++i) {
        double r = 0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[i];
        double wr = 0.5 * (b - a) * gl.weights[i] * spec.radial_profile(r);
        for (std::size_t j = 0; j < ang.dirs.size(); ++j) {
          nodes_.push_back(r * ang.dirs[j]);
          weights_.push_back(wr * ang.weights[j]);
        }
      }
    }
  }

  template <class G>
  auto integrate(G&& g) const -> decltype(g(std::declval<const Vec&>())) {
    using R = decltype(g(std::declval<const Vec&>()));
    if (nodes_.empty()) {
      if constexpr (std::is_arithmetic_v<R>) return R(0);
      else return R();
    }
    R acc = weights_[0] * g(nodes_[0]);
    for (std::size_t i = 1; i < nodes_.size(); ++i) acc += weights_[i] * g(nodes_[i]);
    return acc;
  }

  std::size_t size() const { return nodes_.size(); }
  const std::vector<Vec>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }

  /// Radius beyond which the remaining mass is below 1e-16 of the total.
  static double tail_cap(const LevyMeasureSpec& spec, double r0) {
    double lo = std::max(r0, 1e-300);
    double total = nu_mass(spec, {lo, kInf, 0});
    double r = std::max(1.0, 2.0 * r0);
    for (int k = 0; k < 200; ++k, r *= 1.25)
      if (nu_mass(spec, {r, kInf, 0}) <= 1e-16 * total) return r;
    throw QuadratureError("could not locate a tail cutoff for the mark distribution");
  }

 private:
  std::vector<Vec> nodes_;
  std::vector<double> weights_;
};

// =============================================================================
// Mark sampling
// =============================================================================

/// Draws marks from nu restricted to a region and normalised. Radii come
/// from an inverse-CDF table (1024 cells) or, on request, from rejection
/// sampling; directions are uniform on the sphere (or the requested half).
class MarkSampler {
 public:
  enum class Method { table, rejection };
  static constexpr int kCells = 1024;

  MarkSampler() = default;

  MarkSampler(const LevyMeasureSpec& spec, const RadialRegion& region, Method method = Method::table)
      : spec_(spec), region_(region), method_(method) {
    detail::check_region(spec, region);
    mass_ = nu_mass(spec, region);
    if (!(mass_ > 0.0))
      throw InvalidArgument("mark region [" + std::to_string(region.r_min) + ", " + std::to_string(region.r_max) +
                            ") carries no mass");
    if (method == Method::table) build_table();
  }

  double mass() const { return mass_; }
  const RadialRegion& region() const { return region_; }
  const LevyMeasureSpec& spec() const { return spec_; }

  double sample_radius(Rng& rng) const {
    if (method_ == Method::table) {
      double u = rng.uniform();
      if (u >= table_fraction_) return reject_radius(rng, cap_, region_.r_max);
      double target = u / table_fraction_ * cdf_.back();
      auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
      std::size_t i = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - cdf_.begin(), 1), cdf_.size() - 1);
      double c0 = cdf_[i - 1], c1 = cdf_[i];
      double t = c1 > c0 ? (target - c0) / (c1 - c0) : 0.5;
      return nodes_[i - 1] + t * (nodes_[i] - nodes_[i - 1]);
    }
    return reject_radius(rng, region_.r_min, region_.r_max);
  }

  Vec sample_direction(Rng& rng) const {
    const int d = spec_.dim;
    Vec u(d);
    if (d == 1) {
      if (region_.side != 0) u[0] = region_.side;
      else u[0] = rng.uniform() < 0.5 * (1.0 + spec_.skew) ? 1.0 : -1.0;
      return u;
    }
    double n2 = 0.0;
    do {
      for (int i = 0; i < d; ++i) u[i] = rng.normal();
      n2 = u.squaredNorm();
    } while (n2 == 0.0);
    u /= std::sqrt(n2);
    if (region_.side != 0 && u[0] * region_.side < 0) u[0] = -u[0];
    return u;
  }

  Vec sample(Rng& rng) const {
    double r = sample_radius(rng);
    return r * sample_direction(rng);
  }

 private:
  void build_table() {
    double r0 = region_.r_min, r1 = region_.r_max;
    cap_ = std::isfinite(r1) ? r1 : std::max(MarkQuadrature::tail_cap(spec_, std::max(r0, 1e-12)), r0);
    double hi = std::min(cap_, r1);
    nodes_.resize(kCells + 1);
    bool geometric = r0 > 0.0 && hi / r0 > 10.0;
    for (int i = 0; i <= kCells; ++i) {
      double t = static_cast<double>(i) / kCells;
      nodes_[i] = geometric ? r0 * std::pow(hi / r0, t) : r0 + (hi - r0) * t;
    }
    nodes_.back() = hi;
    cdf_.assign(kCells + 1, 0.0);
    quad::Options opt{.rel_tol = 1e-12};
    for (int i = 0; i < kCells; ++i) {
      double m = quad::integrate([&](double r) { return spec_.radial_profile(r); }, nodes_[i], nodes_[i + 1], opt).value;
      cdf_[i + 1] = cdf_[i] + m;
    }
    double table_mass = cdf_.back() * spec_.side_fraction(region_.side);
    table_fraction_ = hi < r1 ? std::min(1.0, table_mass / mass_) : 1.0;
  }

  /// Exact radial draw on [lo, hi) by rejection.
  double reject_radius(Rng& rng, double lo, double hi) const {
    const int d = spec_.dim;
    if (spec_.family == Family::finite_density) {
      const double kappa = spec_.rate;
      double sd = std::sqrt(0.5 / kappa);
      // Plain normal proposal when the annulus is not a far tail.
      if (lo * lo * kappa < 4.0) {
        for (long k = 0; k < 100000000L; ++k) {
          double s2 = 0.0;
          for (int i = 0; i < d; ++i) {
            double g = sd * rng.normal();
            s2 += g * g;
          }
          double r = std::sqrt(s2);
          if (r >= lo && r < hi) return r;
        }
        throw Error("rejection sampler failed to hit the mark region");
      }
      // Tail: r^2 = lo^2 + Exp(kappa/2) proposal, accept with r^{d-2} e^{-kappa r^2 / 2} / max.
      double rstar = d > 2 ? std::max(lo, std::sqrt((d - 2) / kappa)) : lo;
      auto ratio = [&](double r) { return std::pow(r, d - 2) * std::exp(-0.5 * kappa * r * r); };
      double mx = ratio(rstar);
      for (;;) {
        double r = std::sqrt(lo * lo + rng.exponential(0.5 * kappa));
        if (r >= hi) continue;
        if (rng.uniform() * mx <= ratio(r)) return r;
      }
    }
    // Power-law families: q(r) ~ r^{-1-a} exp(-r^p) with truncated power proposal.
    double a = spec_.family == Family::appendix_tempered ? spec_.beta_tail : spec_.stability_index;
    double p = spec_.family == Family::appendix_tempered ? spec_.alpha_temper : 2.0;
    double top = std::isfinite(hi) ? hi : std::pow(std::pow(lo, p) + 60.0, 1.0 / p);
    for (;;) {
      double u = rng.uniform_open();
      double r;
      if (a > 0.0) {
        double ratio = std::pow(lo / top, a);
        r = lo * std::pow(1.0 - u * (1.0 - ratio), -1.0 / a);
      } else {
        r = lo * std::pow(top / lo, u);
      }
      if (r >= top) continue;
      if (rng.uniform() <= std::exp(-(std::pow(r, p) - std::pow(lo, p)))) return r;
    }
  }

  LevyMeasureSpec spec_;
  RadialRegion region_;
  Method method_ = Method::table;
  double mass_ = 0.0;
  double cap_ = kInf;
  double table_fraction_ = 1.0;
  std::vector<double> nodes_;
  std::vector<double> cdf_;
};

/// One mark from nu restricted to `region`, normalised.
inline Vec sample_mark(const LevyMeasureSpec& spec, const RadialRegion& region, Rng& rng) {
  return MarkSampler(spec, region).sample(rng);
}

}  // namespace levyldp
