#pragma once

// Shared vocabulary: state vectors, error types, seeded random streams and
// the small statistical helpers every Monte Carlo module reports with.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace levyldp {

inline constexpr int kMaxDim = 16;

/// State and mark vectors. Fixed capacity keeps the inner loops allocation free.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline Vec zeros(int dim) { return Vec::Zero(dim); }
inline Vec scalar_vec(double v) {
  Vec out(1);
  out[0] = v;
  return out;
}

// =============================================================================
// Errors
// =============================================================================

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on user input was violated (bad grid, bad parameters, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An adaptive quadrature did not settle or diverged.
class QuadratureError : public Error {
 public:
  using Error::Error;
};

/// A simulated path left the explosion radius.
class PathExplosion : public Error {
 public:
  PathExplosion(double time, double norm, double radius)
      : Error("path exploded at t=" + std::to_string(time) + " (|state|=" + std::to_string(norm) +
              " > " + std::to_string(radius) + ")"),
        time_(time),
        norm_(norm) {}
  double time() const { return time_; }
  double norm() const { return norm_; }

 private:
  double time_;
  double norm_;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

// =============================================================================
// Random streams
// =============================================================================

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based seed derivation: seed = H(...H(H(master) ^ k0) ^ k1 ...).
/// Trial seeds depend only on (master, indices), never on worker scheduling.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = splitmix64(master);
  for (std::uint64_t k : path) s = splitmix64(s ^ splitmix64(k + 0x632BE59BD9B4E019ULL));
  return s;
}

/// A seeded random stream. Conversions to uniforms/normals are done here rather
/// than with <random> distributions so the bit pattern is the same on every
/// standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Child stream keyed by `tag`; independent of how much this stream was consumed.
  Rng split(std::uint64_t tag) const { return Rng(derive_seed(seed_, {tag})); }

  std::uint64_t bits() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1).
  double uniform_open() {
    for (;;) {
      double u = uniform();
      if (u > 0.0) return u;
    }
  }

  double exponential(double rate) { return -std::log(uniform_open()) / rate; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform_open();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double th = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(th);
    has_spare_ = true;
    return r * std::cos(th);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stream tags used when an operation needs more than one child stream.
namespace stream_tag {
inline constexpr std::uint64_t events = 1;
inline constexpr std::uint64_t thinning = 2;
inline constexpr std::uint64_t small_jumps = 3;
inline constexpr std::uint64_t big_jumps = 4;
}  // namespace stream_tag

// =============================================================================
// Statistics
// =============================================================================

struct MeanEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
};

inline MeanEstimate mean_and_stderr(std::span<const double> xs) {
  MeanEstimate out;
  out.n = xs.size();
  if (xs.empty()) return out;
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  out.mean = m;
  if (xs.size() > 1) out.stderr_ = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  return out;
}

inline double median(std::vector<double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Wilson score interval for a binomial proportion; z is the normal quantile.
inline Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054) {
  if (trials == 0) return {0.0, 1.0};
  double n = static_cast<double>(trials);
  double p = static_cast<double>(successes) / n;
  double z2 = z * z;
  double denom = 1.0 + z2 / n;
  double centre = (p + z2 / (2.0 * n)) / denom;
  double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  Interval iv{std::max(0.0, centre - half), std::min(1.0, centre + half)};
  if (successes == 0) iv.lo = 0.0;
  if (successes == trials) iv.hi = 1.0;
  return iv;
}

/// Standard normal quantile (Acklam's rational approximation, |err| < 1.2e-9).
inline double normal_quantile(double p) {
  require(p > 0.0 && p < 1.0, "normal_quantile: p must lie in (0,1)");
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double plow = 0.02425;
  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) return -normal_quantile(1.0 - p);
  double q = p - 0.5;
  double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

/// Two-sided two-proportion z statistic (pooled).
inline double two_proportion_z(std::size_t k1, std::size_t n1, std::size_t k2, std::size_t n2) {
  double p1 = static_cast<double>(k1) / static_cast<double>(n1);
  double p2 = static_cast<double>(k2) / static_cast<double>(n2);
  double p = static_cast<double>(k1 + k2) / static_cast<double>(n1 + n2);
  double se = std::sqrt(p * (1.0 - p) * (1.0 / static_cast<double>(n1) + 1.0 / static_cast<double>(n2)));
  if (se == 0.0) return 0.0;
  return (p1 - p2) / se;
}

/// Batch-means accumulator for time averages of correlated samples.
class BatchMeans {
 public:
  BatchMeans(std::size_t total_samples, std::size_t batches)
      : per_batch_(std::max<std::size_t>(1, total_samples / std::max<std::size_t>(1, batches))) {}

  void add(double v) {
    cur_ += v;
    ++cur_n_;
    if (cur_n_ == per_batch_) {
      means_.push_back(cur_ / static_cast<double>(cur_n_));
      cur_ = 0.0;
      cur_n_ = 0;
    }
  }

  const std::vector<double>& batch_means() const { return means_; }

  MeanEstimate estimate() const { return mean_and_stderr(means_); }

 private:
  std::size_t per_batch_;
  double cur_ = 0.0;
  std::size_t cur_n_ = 0;
  std::vector<double> means_;
};

}  // namespace levyldp
