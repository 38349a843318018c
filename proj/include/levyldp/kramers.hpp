#pragma once

// First-exit experiments for the slow component: exit times, exit loci,
// excursion counts, and the regression of eps ln E[sigma] against the
// potential height.

#include "levyldp/core.hpp"
#include "levyldp/csv.hpp"
#include "levyldp/domain.hpp"
#include "levyldp/msde.hpp"
#include "levyldp/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace levyldp {

// =============================================================================
// Experiment
// =============================================================================

struct ExitExperimentConfig {
  Domain domain = Domain::interval(-1.0, 1.0);
  double rho = -1.0;        // < 0: 0.2 * inradius
  double rho_prime = -1.0;  // < 0: 0.4 * inradius
  std::vector<double> eps_grid{0.3, 0.2, 0.15};
  int trials = 1000;
  long max_steps = 10'000'000;  // censoring cap per trial
  double h_factor = 0.1;        // step = h_factor * eps
  Vec x0 = scalar_vec(0.0);
  Vec y0 = scalar_vec(0.0);
  int workers = 1;
  IntegratorOptions integrator;

  double rho_inner() const { return rho > 0.0 ? rho : 0.2 * domain.inradius(); }
  double rho_outer() const { return rho_prime > 0.0 ? rho_prime : 0.4 * domain.inradius(); }

  void validate(int d) const {
    require(domain.dim() == d, "exit experiment: domain dimension differs from the slow dimension");
    require(x0.size() == d, "exit experiment: x0 has the wrong dimension");
    require(domain.contains(x0), "exit experiment: x0 must lie in the domain");
    require(!eps_grid.empty(), "exit experiment: eps_grid is empty");
    require(trials >= 1 && max_steps >= 1, "exit experiment: need trials >= 1 and max_steps >= 1");
    require(h_factor > 0.0 && h_factor <= 0.1, "exit experiment: h_factor must lie in (0, 0.1]");
    double r = rho_inner(), rp = rho_outer();
    require(r > 0.0 && r < rp, "exit experiment: need 0 < rho < rho'");
    require(rp < domain.inradius(), "exit experiment: the closed ball of radius rho' must lie inside the domain");
  }
};

struct ExitRecord {
  double eps = 0.0;
  std::uint64_t seed = 0;
  double sigma = 0.0;  // exit time, or the time cap when censored
  bool censored = false;
  bool exploded = false;
  Vec locus;           // slow state at exit (last state when censored)
  long ell = 0;        // excursion cycles started before exit
  double h_step = 0.0;
};

struct ExitLevel {
  double eps = 0.0;
  double time_cap = 0.0;
  std::vector<ExitRecord> records;
  std::size_t censored = 0;
  bool uninformative = false;  // every trial censored
};

namespace detail {

/// Stops at the first state outside D; counts cycles
/// closed ball rho -> sphere rho' -> closed ball rho.
struct ExitObserver {
  const Domain* D;
  int d;
  double rho, rho_prime;
  bool armed = true;
  long ell = 0;
  bool exited = false;
  double t_exit = 0.0;
  Vec locus;

  bool visit(double t, const Vec& s) {
    Vec x = s.head(d);
    if (!D->contains(x)) {
      exited = true;
      t_exit = t;
      locus = x;
      return true;
    }
    double r = x.norm();
    if (armed && r <= rho) {
      ++ell;
      armed = false;
    } else if (!armed && r >= rho_prime) {
      armed = true;
    }
    locus = x;
    return false;
  }
  bool on_jump(double t, Vec& s) { return visit(t, s); }
  bool on_node(long, double t, Vec& s) { return visit(t, s); }
};

}  // namespace detail

/// Plain Monte Carlo exit trials per eps. Trial tr at level ei uses the seed
/// derive_seed(master, {ei, tr}); results do not depend on the worker count.
inline std::vector<ExitLevel> run_exit_trials(const SystemCoefficients& s, const JumpNoise& noise,
                                              const ExitExperimentConfig& cfg, const Rng& rng) {
  cfg.validate(s.d);
  require(cfg.y0.size() == s.k, "exit experiment: y0 has the wrong dimension");
  std::vector<ExitLevel> out;
  for (std::size_t ei = 0; ei < cfg.eps_grid.size(); ++ei) {
    const double eps = cfg.eps_grid[ei];
    require(eps > 0.0 && eps <= 1.0, "exit experiment: eps must lie in (0, 1]");
    const double h = cfg.h_factor * eps;
    ExitLevel lvl;
    lvl.eps = eps;
    lvl.time_cap = static_cast<double>(cfg.max_steps) * h;
    lvl.records.resize(cfg.trials);
    MultiscaleModel model(s, noise, eps);
    parallel_for(static_cast<std::size_t>(cfg.trials), cfg.workers, [&](std::size_t tr) {
      ExitRecord rec;
      rec.eps = eps;
      rec.seed = derive_seed(rng.seed(), {ei, tr});
      rec.h_step = h;
      Vec st(s.d + s.k);
      st << cfg.x0, cfg.y0;
      detail::ExitObserver obs{&cfg.domain, s.d, cfg.rho_inner(), cfg.rho_outer()};
      try {
        detail::drive(model, noise, eps, nullptr, Rng(rec.seed), st, h, cfg.max_steps, obs, cfg.integrator, nullptr);
      } catch (const PathExplosion& e) {
        // an explosion leaves the bounded domain
        obs.exited = true;
        obs.t_exit = e.time();
        rec.exploded = true;
        obs.locus = st.head(s.d);
      }
      rec.censored = !obs.exited;
      rec.sigma = obs.exited ? obs.t_exit : lvl.time_cap;
      rec.locus = obs.locus;
      rec.ell = obs.ell;
      lvl.records[tr] = rec;
    });
    for (const auto& r : lvl.records) lvl.censored += r.censored ? 1 : 0;
    lvl.uninformative = lvl.censored == lvl.records.size();
    out.push_back(std::move(lvl));
  }
  return out;
}

inline CsvTable exit_records_csv(const std::vector<ExitLevel>& levels) {
  int d = 0;
  for (const auto& l : levels)
    if (!l.records.empty()) d = static_cast<int>(l.records.front().locus.size());
  std::vector<std::string> header{"eps", "seed", "sigma", "censored"};
  for (int i = 0; i < d; ++i) header.push_back("locus_" + std::to_string(i));
  header.insert(header.end(), {"ell", "h_step"});
  CsvTable t(header);
  for (const auto& l : levels)
    for (const auto& r : l.records) {
      std::vector<CsvTable::Cell> row{r.eps, static_cast<long long>(r.seed), r.sigma,
                                      static_cast<long long>(r.censored)};
      for (int i = 0; i < d; ++i) row.push_back(r.locus[i]);
      row.push_back(static_cast<long long>(r.ell));
      row.push_back(r.h_step);
      t.add(row);
    }
  return t;
}

// =============================================================================
// Exit-time regression
// =============================================================================

struct KramersLevel {
  double eps = 0.0;
  std::size_t trials = 0, censored = 0;
  double mean_sigma = 0.0, mean_stderr = 0.0;
  double eps_ln_mean = 0.0;
  Interval eps_ln_mean_ci;  // delta-method 95% interval
  double median_sigma = 0.0;
  std::vector<double> band_delta;     // absolute band half-widths
  std::vector<double> band_fraction;  // share of trials with e^{(V-d)/eps} < sigma < e^{(V+d)/eps}
  bool usable = false;
};

struct KramersFit {
  double Vbar = 0.0;
  std::vector<KramersLevel> levels;
  double intercept = 0.0;  // extrapolated limit of eps ln E[sigma] as eps -> 0
  double slope = 0.0;
  bool partial = false;  // fewer than three usable levels
  bool medians_increasing = false;
  bool eps_ln_mean_nondecreasing = false;  // as eps decreases, within joint CIs
};

/// Least-squares line eps ln E[sigma] = intercept + slope * eps over usable
/// levels. Censored trials enter the mean at the cap (a lower bound).
inline KramersFit kramers_regression(const std::vector<ExitLevel>& levels, double Vbar,
                                     std::vector<double> band_fractions_of_V = {0.1, 0.2}) {
  KramersFit fit;
  fit.Vbar = Vbar;
  for (const auto& l : levels) {
    KramersLevel k;
    k.eps = l.eps;
    k.trials = l.records.size();
    k.censored = l.censored;
    std::vector<double> s;
    for (const auto& r : l.records) s.push_back(r.sigma);
    auto m = mean_and_stderr(s);
    k.mean_sigma = m.mean;
    k.mean_stderr = m.stderr_;
    k.median_sigma = median(s);
    k.usable = !l.uninformative && m.mean > 0.0;
    if (k.usable) {
      k.eps_ln_mean = l.eps * std::log(m.mean);
      double half = 1.959963984540054 * l.eps * m.stderr_ / m.mean;
      k.eps_ln_mean_ci = {k.eps_ln_mean - half, k.eps_ln_mean + half};
    }
    for (double f : band_fractions_of_V) {
      double delta = f * Vbar, lo = std::exp((Vbar - delta) / l.eps), hi = std::exp((Vbar + delta) / l.eps);
      std::size_t in = 0;
      for (double v : s) in += (v > lo && v < hi) ? 1 : 0;
      k.band_delta.push_back(delta);
      k.band_fraction.push_back(s.empty() ? 0.0 : static_cast<double>(in) / static_cast<double>(s.size()));
    }
    fit.levels.push_back(k);
  }
  std::vector<double> xs, ys;
  for (const auto& k : fit.levels)
    if (k.usable) {
      xs.push_back(k.eps);
      ys.push_back(k.eps_ln_mean);
    }
  fit.partial = xs.size() < 3;
  if (xs.size() >= 2) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      mx += xs[i];
      my += ys[i];
    }
    mx /= xs.size();
    my /= xs.size();
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxx += (xs[i] - mx) * (xs[i] - mx);
      sxy += (xs[i] - mx) * (ys[i] - my);
    }
    fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
    fit.intercept = my - fit.slope * mx;
  } else if (xs.size() == 1) {
    fit.intercept = ys[0];
  }
  // trends as eps decreases
  std::vector<const KramersLevel*> by_eps;
  for (const auto& k : fit.levels) by_eps.push_back(&k);
  std::sort(by_eps.begin(), by_eps.end(), [](auto* a, auto* b) { return a->eps > b->eps; });
  fit.medians_increasing = by_eps.size() >= 2;
  fit.eps_ln_mean_nondecreasing = by_eps.size() >= 2;
  for (std::size_t i = 1; i < by_eps.size(); ++i) {
    if (!(by_eps[i]->median_sigma > by_eps[i - 1]->median_sigma)) fit.medians_increasing = false;
    if (!(by_eps[i]->eps_ln_mean_ci.hi >= by_eps[i - 1]->eps_ln_mean_ci.lo)) fit.eps_ln_mean_nondecreasing = false;
  }
  return fit;
}

// =============================================================================
// Exit locus
// =============================================================================

struct LocusHistogram {
  double eps = 0.0;
  std::size_t n = 0;  // uncensored records
  std::vector<BoundaryNode> bins;
  std::vector<std::size_t> counts;
  std::vector<double> freq;
  std::vector<Interval> ci;
  std::optional<double> concentration;  // share within delta of z*; empty when no z* is given
  bool empty = false;
};

/// Assigns each uncensored exit locus to its nearest boundary bin.
inline LocusHistogram exit_locus_histogram(const ExitLevel& level, const std::vector<BoundaryNode>& bins,
                                           const std::optional<Vec>& z_star = std::nullopt, double delta = 0.0) {
  require(!bins.empty(), "exit_locus_histogram: no bins");
  LocusHistogram h;
  h.eps = level.eps;
  h.bins = bins;
  h.counts.assign(bins.size(), 0);
  std::size_t near = 0;
  for (const auto& r : level.records) {
    if (r.censored) continue;
    ++h.n;
    ++h.counts[Domain::nearest_node(bins, r.locus)];
    if (z_star && (r.locus - *z_star).norm() < delta) ++near;
  }
  h.empty = h.n == 0;
  for (std::size_t c : h.counts) {
    h.freq.push_back(h.n ? static_cast<double>(c) / static_cast<double>(h.n) : 0.0);
    h.ci.push_back(wilson_interval(c, h.n));
  }
  if (z_star && h.n) h.concentration = static_cast<double>(near) / static_cast<double>(h.n);
  return h;
}

/// True when the frequency of `bin` is nondecreasing as eps decreases.
inline bool locus_share_nondecreasing(std::vector<LocusHistogram> hs, std::size_t bin) {
  std::sort(hs.begin(), hs.end(), [](const auto& a, const auto& b) { return a.eps > b.eps; });
  for (std::size_t i = 1; i < hs.size(); ++i)
    if (hs[i].freq.at(bin) < hs[i - 1].freq.at(bin)) return false;
  return true;
}

}  // namespace levyldp
