#pragma once

// Experiment orchestration: structured configuration with named blocks,
// key=value overrides, dispatch to the library modules, and on-disk artifacts
// (one CSV per result table, manifest.json, summary.txt).

#include "levyldp/action.hpp"
#include "levyldp/averaging.hpp"
#include "levyldp/benchmarks.hpp"
#include "levyldp/csv.hpp"
#include "levyldp/domain.hpp"
#include "levyldp/kramers.hpp"
#include "levyldp/msde.hpp"
#include "levyldp/parallel.hpp"
#include "levyldp/toyldp.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace levyldp::experiment {

using json = nlohmann::json;

inline constexpr const char* kVersion = "0.3.0";

/// Malformed configuration: parse errors, missing or mistyped fields.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

// =============================================================================
// Hashing
// =============================================================================

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// =============================================================================
// Kinds
// =============================================================================

enum class Kind { validate, average, simulate, action, exit, toyldp };

inline const std::vector<std::pair<Kind, std::string>>& kind_names() {
  static const std::vector<std::pair<Kind, std::string>> names{{Kind::validate, "validate"}, {Kind::average, "average"},
                                                               {Kind::simulate, "simulate"}, {Kind::action, "action"},
                                                               {Kind::exit, "exit"},         {Kind::toyldp, "toyldp"}};
  return names;
}

inline std::string kind_name(Kind k) {
  for (const auto& [kk, n] : kind_names())
    if (kk == k) return n;
  return "?";
}

inline Kind parse_kind(const std::string& s) {
  for (const auto& [k, n] : kind_names())
    if (n == s) return k;
  throw ConfigError("config field 'kind': unknown experiment kind '" + s +
                    "' (validate, average, simulate, action, exit, toyldp)");
}

// =============================================================================
// Loading and overrides
// =============================================================================

/// Parses JSON text (comments allowed); errors carry line and column.
inline json parse_config_text(const std::string& text, const std::string& origin = "<config>") {
  try {
    return json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
}

/// Reads a configuration file. A manifest written by a previous run is
/// accepted too: its embedded effective configuration is returned.
inline json load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  json j = parse_config_text(ss.str(), path);
  if (!j.is_object()) throw ConfigError(path + ": top level must be an object");
  if (j.contains("config_hash") && j.contains("config")) return j.at("config");
  return j;
}

/// Applies "a.b.c=value". The value is parsed as JSON when possible and
/// taken as a plain string otherwise.
inline void apply_override(json& cfg, const std::string& kv) {
  auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + kv + "': expected key=value");
  std::string key = kv.substr(0, eq), raw = kv.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &cfg;
  std::size_t start = 0;
  for (;;) {
    auto dot = key.find('.', start);
    std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override '" + kv + "': empty key segment");
    if (!node->is_object()) throw ConfigError("override '" + kv + "': '" + key.substr(0, start - 1) + "' is not a block");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    if (!node->contains(part)) (*node)[part] = json::object();
    node = &(*node)[part];
    start = dot + 1;
  }
}

// =============================================================================
// Typed block access
// =============================================================================

/// A configuration block with typed getters. Every error names the full
/// field path; finish() rejects keys that were never read (typos).
class Block {
 public:
  Block(const json& j, std::string path) : j_(&j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError("config field '" + path_ + "': expected a block (object)");
  }

  const std::string& path() const { return path_; }
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  bool has(const std::string& key) const { return j_->contains(key); }

  const json& raw(const std::string& key) const {
    seen_.insert(key);
    if (!has(key)) throw ConfigError("config field '" + field(key) + "': missing");
    return j_->at(key);
  }

  double number(const std::string& key) const { return as_number(raw(key), field(key)); }
  double number(const std::string& key, double def) const { return has(key) ? number(key) : (seen_.insert(key), def); }

  long integer(const std::string& key) const {
    const json& v = raw(key);
    double x = as_number(v, field(key));
    if (std::floor(x) != x || std::abs(x) > 9e15) throw ConfigError("config field '" + field(key) + "': expected an integer");
    return static_cast<long>(x);
  }
  long integer(const std::string& key, long def) const { return has(key) ? integer(key) : (seen_.insert(key), def); }

  bool boolean(const std::string& key, bool def) const {
    if (!has(key)) return seen_.insert(key), def;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError("config field '" + field(key) + "': expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError("config field '" + field(key) + "': expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& def) const {
    return has(key) ? string(key) : (seen_.insert(key), def);
  }

  std::vector<double> numbers(const std::string& key) const {
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError("config field '" + field(key) + "': expected a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], field(key) + "[" + std::to_string(i) + "]"));
    return out;
  }
  std::vector<double> numbers(const std::string& key, std::vector<double> def) const {
    return has(key) ? numbers(key) : (seen_.insert(key), def);
  }

  /// Non-empty list of numbers.
  std::vector<double> grid(const std::string& key) const {
    auto g = numbers(key);
    if (g.empty()) throw ConfigError("config field '" + field(key) + "': must not be empty");
    return g;
  }
  std::vector<double> grid(const std::string& key, std::vector<double> def) const {
    return has(key) ? grid(key) : (seen_.insert(key), def);
  }

  /// A point: a number (d = 1) or a list of numbers.
  Vec vec(const std::string& key, int dim) const {
    const json& v = raw(key);
    Vec out = to_vec(v, field(key));
    if (out.size() != dim)
      throw ConfigError("config field '" + field(key) + "': expected " + std::to_string(dim) + " component(s)");
    return out;
  }
  Vec vec(const std::string& key, int dim, const Vec& def) const {
    return has(key) ? vec(key, dim) : (seen_.insert(key), def);
  }

  std::vector<Vec> vecs(const std::string& key, int dim) const {
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError("config field '" + field(key) + "': expected a list of points");
    std::vector<Vec> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      std::string f = field(key) + "[" + std::to_string(i) + "]";
      Vec p = to_vec(v[i], f);
      if (p.size() != dim) throw ConfigError("config field '" + f + "': expected " + std::to_string(dim) + " component(s)");
      out.push_back(p);
    }
    return out;
  }

  Block block(const std::string& key) const { return Block(raw(key), field(key)); }
  std::optional<Block> optional_block(const std::string& key) const {
    if (!has(key)) return std::nullopt;
    return block(key);
  }

  void ignore(const std::string& key) const { seen_.insert(key); }

  void finish() const {
    for (auto it = j_->begin(); it != j_->end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("config field '" + field(it.key()) + "': unknown key");
  }

 private:
  static double as_number(const json& v, const std::string& f) {
    if (!v.is_number()) throw ConfigError("config field '" + f + "': expected a number, got " + v.type_name());
    return v.get<double>();
  }

  static Vec to_vec(const json& v, const std::string& f) {
    if (v.is_number()) return scalar_vec(v.get<double>());
    if (!v.is_array() || v.empty()) throw ConfigError("config field '" + f + "': expected a number or a list of numbers");
    Vec out(static_cast<int>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<int>(i)] = as_number(v[i], f + "[" + std::to_string(i) + "]");
    return out;
  }

  const json* j_;
  std::string path_;
  mutable std::set<std::string> seen_;
};

// =============================================================================
// Builders
// =============================================================================

inline LevyMeasureSpec measure_from(const Block& b) {
  LevyMeasureSpec s;
  s.dim = static_cast<int>(b.integer("dim", 1));
  try {
    s.family = parse_family(b.string("family", "finite-density"));
  } catch (const InvalidArgument& e) {
    throw ConfigError("config field '" + b.field("family") + "': " + e.what());
  }
  s.scale = b.number("scale", s.scale);
  s.rate = b.number("rate", s.rate);
  s.stability_index = b.number("stability_index", s.stability_index);
  s.alpha_temper = b.number("alpha_temper", s.alpha_temper);
  s.beta_tail = b.number("beta_tail", s.beta_tail);
  s.alpha_exp = b.number("alpha_exp", s.alpha_exp);
  s.delta_min = b.number("delta_min", s.delta_min);
  s.skew = b.number("skew", s.skew);
  s.declared_symmetric = b.boolean("declared_symmetric", s.skew == 0.0);
  b.finish();
  return s;
}

/// Built-in benchmark by name, or "custom" scalar linear coefficients
/// a = ax x + ay y + a0, f = fx x + fy y, c = c z, h = h z.
inline LinearSpec system_from(const Block& b) {
  std::string name = b.string("benchmark", "linear");
  LinearSpec ls;
  if (name == "custom") {
    ls = scalar_linear(b.number("ax"), b.number("ay"), b.number("fx"), b.number("fy"), b.number("c"), b.number("h"),
                       b.number("a0", 0.0));
  } else {
    try {
      ls = named_benchmark(name, b.number("rate", 1.0));
    } catch (const InvalidArgument& e) {
      throw ConfigError("config field '" + b.field("benchmark") + "': " + e.what());
    }
  }
  b.finish();
  return ls;
}

inline Domain domain_from(const Block& b) {
  std::string type = b.string("type", "interval");
  Domain D;
  if (type == "interval") {
    D = Domain::interval(b.number("lo", -1.0), b.number("hi", 1.0));
  } else if (type == "ball") {
    D = Domain::ball(static_cast<int>(b.integer("dim", 2)), b.number("radius", 1.0));
  } else if (type == "polygon") {
    D = Domain::polygon(b.vecs("vertices", 2));
  } else {
    throw ConfigError("config field '" + b.field("type") + "': unknown domain type '" + type + "' (interval, ball, polygon)");
  }
  b.finish();
  return D;
}

inline ActionOptions action_options_from(const Block& b) {
  ActionOptions o;
  o.intervals = static_cast<int>(b.integer("intervals", o.intervals));
  if (b.has("cell_edges")) {
    auto e = b.numbers("cell_edges");
    e.push_back(kInf);
    o.cell_edges = e;
  } else {
    b.ignore("cell_edges");
  }
  o.mu_schedule = b.numbers("mu_schedule", o.mu_schedule);
  o.max_inner = static_cast<int>(b.integer("max_inner", o.max_inner));
  o.feasibility_tol = b.number("feasibility_tol", o.feasibility_tol);
  o.ode_tol = b.number("ode_tol", o.ode_tol);
  return o;
}

// =============================================================================
// Results
// =============================================================================

struct Artifacts {
  std::vector<std::pair<std::string, CsvTable>> tables;
  std::vector<std::string> summary;
  std::vector<std::pair<std::string, double>> timings;  // seconds per stage
  std::size_t failures = 0;                             // per-trial failures (exploded paths, failed nodes)
  bool validation_failed = false;

  void table(const std::string& name, CsvTable t) { tables.emplace_back(name, std::move(t)); }
  void line(const std::string& s) { summary.push_back(s); }

  const CsvTable* find(const std::string& name) const {
    for (const auto& [n, t] : tables)
      if (n == name) return &t;
    return nullptr;
  }
};

struct RunResult {
  Kind kind = Kind::validate;
  std::uint64_t seed = 0;
  int workers = 1;
  json config;  // effective configuration (overrides applied, seed set)
  std::string config_hash;
  Artifacts artifacts;
};

namespace detail {

template <class F>
auto timed(Artifacts& a, const std::string& stage, F&& f) {
  auto t0 = std::chrono::steady_clock::now();
  if constexpr (std::is_void_v<decltype(f())>) {
    f();
    a.timings.emplace_back(stage, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  } else {
    auto r = f();
    a.timings.emplace_back(stage, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
    return r;
  }
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string fmt_vec(const Vec& v) {
  std::string s = "(";
  for (int i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s + ")";
}

inline void vec_header(std::vector<std::string>& h, const std::string& prefix, int d) {
  for (int i = 0; i < d; ++i) h.push_back(prefix + std::to_string(i));
}

inline void vec_cells(std::vector<CsvTable::Cell>& row, const Vec& v) {
  for (int i = 0; i < v.size(); ++i) row.emplace_back(v[i]);
}

inline CsvTable checks_csv(const ValidationReport& rep) {
  CsvTable t({"check", "passed", "value", "gating", "detail"});
  for (const auto& c : rep.checks)
    t.add({c.name, static_cast<long long>(c.passed), c.value, static_cast<long long>(c.gating), c.detail});
  return t;
}

/// Everything a system-level experiment needs.
struct SystemContext {
  LevyMeasureSpec spec;
  LinearSpec linear;
  SystemCoefficients system;
  std::optional<JumpNoise> noise;
  DriftFn abar_exact;
};

inline SystemContext system_context(const Block& root) {
  SystemContext c;
  c.spec = measure_from(root.block("measure"));
  c.linear = system_from(root.block("system"));
  c.system = linear_system("system", c.linear);
  c.abar_exact = linear_abar(c.linear);
  if (c.spec.dim != c.system.d)
    throw ConfigError("config field 'measure.dim': must equal the slow dimension (" + std::to_string(c.system.d) + ")");
  return c;
}

/// Measure checks, then hypothesis checks. Sets validation_failed on a
/// gating failure; the noise is built only for a valid measure.
inline ValidationReport run_validation(SystemContext& ctx, const Block& root, const Rng& rng, Artifacts& art) {
  int samples = 10000;
  double radius = 3.0;
  if (auto vb = root.optional_block("validate")) {
    samples = static_cast<int>(vb->integer("samples", samples));
    radius = vb->number("radius", radius);
    vb->finish();
  } else {
    root.ignore("validate");
  }
  return timed(art, "validation", [&] {
    ValidationReport rep;
    for (auto c : validate_measure(ctx.spec).checks) {
      c.name = "measure." + c.name;
      rep.checks.push_back(c);
    }
    if (rep.ok()) {
      ctx.noise.emplace(ctx.spec);
      for (auto c : check_hypotheses(ctx.system, *ctx.noise, rng.split(100), samples, radius).checks) {
        c.name = "hypothesis." + c.name;
        rep.checks.push_back(c);
      }
    }
    art.table("checks", checks_csv(rep));
    art.validation_failed = !rep.ok();
    std::size_t gating = 0, passed = 0;
    for (const auto& c : rep.checks)
      if (c.gating) {
        ++gating;
        passed += c.passed ? 1 : 0;
      }
    art.line("hypothesis validation: " + std::to_string(passed) + "/" + std::to_string(gating) + " gating checks passed" +
             (rep.ok() ? "" : " (gating failure)"));
    for (const auto& name : rep.failed()) art.line("  FAILED " + name);
    for (const auto& c : rep.checks)
      if (!c.gating) art.line("  note " + c.name + ": " + (c.passed ? "yes" : c.detail));
    return rep;
  });
}

// =============================================================================
// Kinds
// =============================================================================

inline void run_average(const SystemContext& ctx, const Block& b, const Rng& rng, int workers, Artifacts& art) {
  const auto& s = ctx.system;
  const auto& noise = *ctx.noise;
  // Tabulated averaged coefficient
  long nodes = b.integer("nodes", 9);
  std::vector<Vec> grid;
  if (b.has("x")) {
    grid = b.vecs("x", s.d);
    b.ignore("x_lo");
    b.ignore("x_hi");
  } else {
    if (nodes > 0 && s.d != 1) throw ConfigError("config field '" + b.field("x") + "': required when d > 1");
    if (nodes > 0) {
      grid = uniform_grid_1d(b.number("x_lo", -2.0), b.number("x_hi", 2.0), static_cast<int>(nodes));
    } else {
      b.ignore("x_lo");
      b.ignore("x_hi");
    }
  }
  InvariantOptions io;
  io.T_long = b.number("T_long", io.T_long);
  io.burn_in = b.number("burn_in", io.burn_in);
  io.h_step = b.number("h_step", io.h_step);
  io.batches = static_cast<int>(b.integer("batches", io.batches));
  Vec y_start = b.vec("y_start", s.k, Vec::Zero(s.k));

  AveragingExperimentConfig ac;
  ac.eps_grid = b.grid("eps_grid");
  ac.trials = static_cast<int>(b.integer("trials", ac.trials));
  ac.delta = b.number("delta", ac.delta);
  ac.T = b.number("T", ac.T);
  ac.x0 = b.vec("x0", s.d, scalar_vec(1.0));
  ac.y0 = b.vec("y0", s.k, Vec::Zero(s.k));
  ac.h_factor = b.number("h_factor", ac.h_factor);
  ac.workers = workers;
  std::string comparator = b.string("comparator", "ode");
  if (comparator == "ode") ac.comparator = Comparator::ode;
  else if (comparator == "averaged_sde") ac.comparator = Comparator::averaged_sde;
  else throw ConfigError("config field '" + b.field("comparator") + "': expected 'ode' or 'averaged_sde'");
  std::optional<double> control_g;
  if (b.has("control_g")) control_g = b.number("control_g");
  else b.ignore("control_g");
  std::string abar_source = b.string("abar_source", "exact");
  if (abar_source != "exact" && abar_source != "estimated")
    throw ConfigError("config field '" + b.field("abar_source") + "': expected 'exact' or 'estimated'");
  if (abar_source == "estimated" && grid.size() < 2)
    throw ConfigError("config field '" + b.field("abar_source") + "': 'estimated' needs at least two nodes");
  b.finish();

  std::optional<AbarTable> table;
  if (!grid.empty()) {
    std::vector<InvariantEstimate> est(grid.size());
    std::vector<char> failed(grid.size(), 0);
    Rng node_rng = rng.split(1);
    timed(art, "invariant_measure", [&] {
      parallel_for(grid.size(), workers, [&](std::size_t i) {
        try {
          est[i] = estimate_invariant(s, noise, grid[i], y_start, node_rng.split(i), io);
        } catch (const PathExplosion&) {
          failed[i] = 1;
        }
      });
    });
    std::vector<std::string> h, hi;
    vec_header(h, "x", s.d);
    vec_header(h, "abar", s.d);
    vec_header(h, "stderr", s.d);
    vec_header(h, "abar_exact", s.d);
    vec_header(hi, "x", s.d);
    vec_header(hi, "mean_y", s.k);
    vec_header(hi, "mean_y_stderr", s.k);
    vec_header(hi, "var_y", s.k);
    vec_header(hi, "var_y_stderr", s.k);
    hi.insert(hi.end(), {"second_moment", "moment_constant", "samples", "nonstationary"});
    CsvTable ta(h), ti(hi);
    AbarTable tab;
    double worst = 0.0, worst_z = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      if (failed[i]) {
        ++art.failures;
        continue;
      }
      const auto& e = est[i];
      Vec exact = ctx.abar_exact(grid[i]);
      std::vector<CsvTable::Cell> r;
      vec_cells(r, grid[i]);
      vec_cells(r, e.abar);
      vec_cells(r, e.abar_stderr);
      vec_cells(r, exact);
      ta.add(r);
      std::vector<CsvTable::Cell> ri;
      vec_cells(ri, grid[i]);
      vec_cells(ri, e.mean);
      vec_cells(ri, e.mean_stderr);
      vec_cells(ri, e.variance);
      vec_cells(ri, e.variance_stderr);
      ri.insert(ri.end(), {e.second_moment, e.moment_constant, static_cast<long long>(e.n_samples),
                           static_cast<long long>(e.nonstationary)});
      ti.add(ri);
      tab.nodes.push_back(grid[i]);
      tab.values.push_back(e.abar);
      tab.stderr_.push_back(e.abar_stderr);
      double err = (e.abar - exact).lpNorm<Eigen::Infinity>();
      worst = std::max(worst, err);
      double se = e.abar_stderr.lpNorm<Eigen::Infinity>();
      if (se > 0.0) worst_z = std::max(worst_z, err / se);
    }
    art.table("abar", ta);
    art.table("invariant", ti);
    art.line("averaged coefficient: " + std::to_string(tab.nodes.size()) + " nodes, max |abar_hat - abar| = " +
             fmt(worst) + " (" + fmt(worst_z) + " stderr)");
    table = tab;
  }

  DriftFn abar = abar_source == "estimated" ? table->as_drift() : ctx.abar_exact;
  std::optional<ControlGrid> control;
  if (control_g) control = ControlGrid::constant(ac.T, *control_g);
  auto rows = timed(art, "averaging_principle", [&] {
    return averaging_experiment(s, noise, abar, ac, control ? &*control : nullptr, rng.split(2));
  });
  CsvTable te({"eps", "trials", "exceed", "failures", "p", "ci_lo", "ci_hi", "median_sup"});
  bool monotone = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& e = rows[i];
    te.add({e.eps, static_cast<long long>(e.trials), static_cast<long long>(e.exceed),
            static_cast<long long>(e.failures), e.p, e.ci.lo, e.ci.hi, e.median_sup});
    art.failures += e.failures;
    if (i > 0 && rows[i].eps < rows[i - 1].eps && rows[i].p > rows[i - 1].p) monotone = false;
  }
  art.table("exceedance", te);
  art.line("averaging principle: P(sup |X - Xbar| > " + fmt(ac.delta) + ") over " + std::to_string(rows.size()) +
           " eps levels, nonincreasing as eps decreases: " + (monotone ? "yes" : "no"));
  for (const auto& e : rows)
    art.line("  eps=" + fmt(e.eps) + " p=" + fmt(e.p) + " [" + fmt(e.ci.lo) + ", " + fmt(e.ci.hi) + "]");
}

inline void run_simulate(const SystemContext& ctx, const Block& b, const Rng& rng, int workers, Artifacts& art) {
  const auto& s = ctx.system;
  const auto& noise = *ctx.noise;
  auto eps_grid = b.grid("eps_grid");
  long paths = b.integer("paths", 3);
  double T = b.number("T", 2.0);
  Vec x0 = b.vec("x0", s.d, scalar_vec(1.0));
  Vec y0 = b.vec("y0", s.k, Vec::Zero(s.k));
  double h_factor = b.number("h_factor", 0.1);
  IntegratorOptions io;
  io.record_every = static_cast<int>(b.integer("record_every", 1));
  io.explosion_radius = b.number("explosion_radius", io.explosion_radius);
  std::optional<ControlGrid> control;
  if (b.has("control_g")) control = ControlGrid::constant(T, b.number("control_g"));
  else b.ignore("control_g");
  bool averaged = b.boolean("averaged", true);
  b.finish();
  if (paths < 1) throw ConfigError("config field '" + b.field("paths") + "': must be >= 1");

  AveragedSystem avg = AveragedSystem::from(s, ctx.abar_exact);
  std::vector<std::string> h{"eps", "path", "t"};
  vec_header(h, "x", s.d);
  vec_header(h, "y", s.k);
  if (averaged) vec_header(h, "xbar", s.d);
  CsvTable t(h);
  timed(art, "paths", [&] {
    for (std::size_t ei = 0; ei < eps_grid.size(); ++ei) {
      const double eps = eps_grid[ei];
      std::vector<std::optional<std::pair<PathPair, SlowPath>>> out(static_cast<std::size_t>(paths));
      parallel_for(out.size(), workers, [&](std::size_t p) {
        Rng r(derive_seed(rng.seed(), {ei, p}));
        try {
          PathPair pp = control ? integrate_controlled(s, noise, eps, *control, x0, y0, T, h_factor * eps, r, io)
                                : integrate_multiscale(s, noise, eps, x0, y0, T, h_factor * eps, r, io);
          SlowPath sp;
          if (averaged) sp = integrate_averaged(avg, noise, eps, control ? &*control : nullptr, x0, T, h_factor * eps, r, io);
          out[p].emplace(std::move(pp), std::move(sp));
        } catch (const PathExplosion&) {
        }
      });
      double sup = 0.0;
      std::size_t ok = 0;
      for (std::size_t p = 0; p < out.size(); ++p) {
        if (!out[p]) {
          ++art.failures;
          continue;
        }
        ++ok;
        const auto& [pp, sp] = *out[p];
        for (std::size_t i = 0; i < pp.t.size(); ++i) {
          std::vector<CsvTable::Cell> row{eps, static_cast<long long>(p), pp.t[i]};
          vec_cells(row, pp.x[i]);
          vec_cells(row, pp.y[i]);
          if (averaged) {
            vec_cells(row, sp.x[i]);
            sup = std::max(sup, (pp.x[i] - sp.x[i]).norm());
          }
          t.add(row);
        }
      }
      art.line("eps=" + fmt(eps) + ": " + std::to_string(ok) + "/" + std::to_string(out.size()) + " paths" +
               (averaged ? ", max sup |X - Xbar| = " + fmt(sup) : ""));
    }
  });
  art.table("paths", t);
}

inline CsvTable controls_csv(const std::vector<std::pair<std::string, const ControlGrid*>>& grids) {
  CsvTable t({"problem", "interval", "t0", "t1", "cell", "r_lo", "r_hi", "side", "g"});
  for (const auto& [name, g] : grids) {
    if (!g || g->intervals() == 0) continue;
    for (int j = 0; j < g->intervals(); ++j)
      for (int c = 0; c < g->num_cells(); ++c) {
        const auto& cell = g->cells()[c];
        t.add({name, static_cast<long long>(j), g->knots()[j], g->knots()[j + 1], static_cast<long long>(c), cell.r_lo,
               cell.r_hi, static_cast<long long>(cell.side), g->at(j, c)});
      }
  }
  return t;
}

inline std::optional<PotentialHeight> potential_from(const SystemContext& ctx, const Block& qb, const Domain& D,
                                                     const ActionOptions& opt, int workers, Artifacts& art) {
  auto T_grid = qb.grid("T_grid", {1.0, 2.0, 4.0, 8.0});
  double offset = qb.number("offset_fraction", 0.05);
  int nodes = static_cast<int>(qb.integer("boundary_nodes", 32));
  qb.finish();
  SkeletonProblem p = SkeletonProblem::from(AveragedSystem::from(ctx.system, ctx.abar_exact), ctx.spec);
  auto ph = timed(art, "potential_height", [&] { return potential_height(p, D, T_grid, opt, offset, nodes, workers); });
  std::vector<std::string> h{"node"};
  vec_header(h, "point", p.d);
  vec_header(h, "target", p.d);
  h.insert(h.end(), {"T", "feasible", "value"});
  CsvTable t(h);
  for (std::size_t i = 0; i < ph.nodes.size(); ++i) {
    const auto& q = ph.per_node[i];
    for (std::size_t k = 0; k < q.horizons.size(); ++k) {
      std::vector<CsvTable::Cell> row{static_cast<long long>(i)};
      vec_cells(row, ph.nodes[i].point);
      vec_cells(row, ph.targets[i]);
      row.emplace_back(q.horizons[k]);
      row.emplace_back(static_cast<long long>(q.per_horizon[k].has_value()));
      row.emplace_back(q.per_horizon[k].value_or(std::numeric_limits<double>::quiet_NaN()));
      t.add(row);
    }
  }
  art.table("quasi_potential", t);
  if (ph.value) {
    const auto& best = ph.per_node[ph.argmin];
    art.line("potential height Vbar = " + fmt(*ph.value) + " at z* = " + fmt_vec(ph.z_star) + ", T* = " +
             fmt(best.T_star) + (best.at_largest_horizon ? " (minimum at the largest horizon)" : ""));
    for (std::size_t i = 0; i < ph.nodes.size(); ++i)
      if (ph.per_node[i].value)
        art.line("  V(0, " + fmt_vec(ph.targets[i]) + ") = " + fmt(*ph.per_node[i].value));
    return ph;
  }
  art.line("potential height: every boundary node infeasible at the optimizer budget");
  return std::nullopt;
}

inline void run_action(const SystemContext& ctx, const Block& b, int workers, Artifacts& art) {
  const int d = ctx.system.d;
  ActionOptions opt = action_options_from(b);
  Vec x0 = b.vec("x0", d, Vec::Zero(d));
  double T = b.number("T", 1.0);
  std::vector<Vec> targets;
  if (b.has("targets")) targets = b.vecs("targets", d);
  else b.ignore("targets");
  std::optional<Block> qb = b.optional_block("quasi_potential");
  std::optional<Domain> D;
  if (qb) D = qb->has("domain") ? domain_from(qb->block("domain")) : Domain::interval(-1.0, 1.0);
  if (qb) qb->ignore("domain");
  b.finish();

  SkeletonProblem p = SkeletonProblem::from(AveragedSystem::from(ctx.system, ctx.abar_exact), ctx.spec);
  std::vector<ActionResult> rs(targets.size());
  timed(art, "rate_function", [&] {
    parallel_for(targets.size(), workers, [&](std::size_t i) { rs[i] = rate_function(p, x0, targets[i], T, opt); });
  });
  std::vector<std::string> h;
  vec_header(h, "target", d);
  h.insert(h.end(), {"T", "feasible", "value", "entropy", "violation"});
  vec_header(h, "terminal", d);
  h.insert(h.end(), {"iterations", "evaluations"});
  CsvTable t(h);
  std::vector<std::pair<std::string, const ControlGrid*>> grids;
  std::vector<std::string> names(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto& r = rs[i];
    std::vector<CsvTable::Cell> row;
    vec_cells(row, targets[i]);
    row.insert(row.end(), {T, static_cast<long long>(r.value.has_value()),
                           r.value.value_or(std::numeric_limits<double>::quiet_NaN()), r.entropy, r.violation});
    vec_cells(row, r.terminal);
    row.insert(row.end(), {static_cast<long long>(r.iterations), static_cast<long long>(r.evaluations)});
    t.add(row);
    names[i] = "target_" + std::to_string(i);
    grids.emplace_back(names[i], &r.control);
    art.line("I(" + fmt_vec(x0) + " -> " + fmt_vec(targets[i]) + ", T=" + fmt(T) + ") = " +
             (r.value ? fmt(*r.value) : std::string("infeasible")) + " (violation " + fmt(r.violation) + ")");
  }
  if (!targets.empty()) {
    art.table("rate", t);
    art.table("controls", controls_csv(grids));
  }
  if (qb) potential_from(ctx, *qb, *D, opt, workers, art);
}

inline void run_exit(const SystemContext& ctx, const Block& b, const Rng& rng, int workers, Artifacts& art) {
  const int d = ctx.system.d;
  ExitExperimentConfig cfg;
  if (b.has("domain")) cfg.domain = domain_from(b.block("domain"));
  else b.ignore("domain");
  cfg.eps_grid = b.grid("eps_grid", cfg.eps_grid);
  cfg.trials = static_cast<int>(b.integer("trials", cfg.trials));
  cfg.max_steps = b.integer("max_steps", cfg.max_steps);
  cfg.h_factor = b.number("h_factor", cfg.h_factor);
  cfg.x0 = b.vec("x0", d, Vec::Zero(d));
  cfg.y0 = b.vec("y0", ctx.system.k, Vec::Zero(ctx.system.k));
  cfg.rho = b.number("rho", cfg.rho);
  cfg.rho_prime = b.number("rho_prime", cfg.rho_prime);
  cfg.integrator.explosion_radius = b.number("explosion_radius", cfg.integrator.explosion_radius);
  cfg.workers = workers;
  int bins = static_cast<int>(b.integer("locus_bins", 32));
  double locus_delta = b.number("locus_delta", 0.1);
  std::optional<double> Vbar;
  std::optional<Vec> z_star;
  std::optional<Block> potential;
  std::optional<ActionOptions> aopt;
  if (b.has("Vbar")) {
    const json& v = b.raw("Vbar");
    if (v.is_number()) {
      Vbar = v.get<double>();
    } else {
      potential = b.block("Vbar");
      aopt = action_options_from(*potential);
    }
  } else {
    b.ignore("Vbar");
  }
  if (b.has("z_star")) z_star = b.vec("z_star", d);
  else b.ignore("z_star");
  b.finish();
  cfg.validate(d);

  if (potential) {
    auto ph = potential_from(ctx, *potential, cfg.domain, *aopt, workers, art);
    if (ph) {
      Vbar = ph->value;
      if (!z_star) z_star = ph->z_star;
    }
  }

  auto levels = timed(art, "exit_trials", [&] { return run_exit_trials(ctx.system, *ctx.noise, cfg, rng.split(3)); });
  art.table("exit_records", exit_records_csv(levels));
  std::size_t censored = 0, exploded = 0;
  for (const auto& l : levels) {
    censored += l.censored;
    for (const auto& r : l.records) exploded += r.exploded ? 1 : 0;
  }
  art.failures += exploded;
  art.line("exit trials: " + std::to_string(levels.size()) + " eps levels x " + std::to_string(cfg.trials) +
           " trials, censored " + std::to_string(censored) + ", exploded " + std::to_string(exploded));

  if (Vbar) {
    auto fit = kramers_regression(levels, *Vbar);
    std::vector<std::string> h{"eps", "usable", "mean_sigma", "mean_stderr", "eps_ln_mean", "eps_ln_ci_lo",
                               "eps_ln_ci_hi", "median_sigma"};
    if (!fit.levels.empty())
      for (double dlt : fit.levels.front().band_delta) h.push_back("band_fraction_" + fmt(dlt));
    CsvTable t(h);
    for (const auto& k : fit.levels) {
      std::vector<CsvTable::Cell> row{k.eps,           static_cast<long long>(k.usable), k.mean_sigma,
                                      k.mean_stderr,   k.eps_ln_mean,                    k.eps_ln_mean_ci.lo,
                                      k.eps_ln_mean_ci.hi, k.median_sigma};
      for (double f : k.band_fraction) row.emplace_back(f);
      t.add(row);
    }
    art.table("kramers", t);
    art.line("Vbar = " + fmt(*Vbar) + "; fitted limit of eps ln E[sigma] = " + fmt(fit.intercept) + " (slope " +
             fmt(fit.slope) + ", relative error " + fmt(std::abs(fit.intercept - *Vbar) / *Vbar) + ")" +
             (fit.partial ? " [partial: fewer than three usable levels]" : ""));
    art.line(std::string("medians strictly increasing in 1/eps: ") + (fit.medians_increasing ? "yes" : "no"));
    art.line(std::string("eps ln E[sigma] nondecreasing as eps decreases: ") +
             (fit.eps_ln_mean_nondecreasing ? "yes" : "no"));
  }

  auto nodes = cfg.domain.boundary_nodes(bins);
  std::vector<LocusHistogram> hs;
  std::vector<std::string> h{"eps", "bin"};
  vec_header(h, "point", d);
  h.insert(h.end(), {"count", "freq", "ci_lo", "ci_hi"});
  CsvTable t(h);
  for (const auto& l : levels) {
    auto hist = exit_locus_histogram(l, nodes, z_star, locus_delta);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      std::vector<CsvTable::Cell> row{l.eps, static_cast<long long>(i)};
      vec_cells(row, nodes[i].point);
      row.insert(row.end(), {static_cast<long long>(hist.counts[i]), hist.freq[i], hist.ci[i].lo, hist.ci[i].hi});
      t.add(row);
    }
    if (hist.concentration)
      art.line("  eps=" + fmt(l.eps) + ": share of exits within " + fmt(locus_delta) + " of z* = " + fmt(*hist.concentration));
    hs.push_back(std::move(hist));
  }
  art.table("exit_locus", t);
  for (std::size_t i = 0; i < nodes.size() && !hs.empty(); ++i) {
    bool any = false;
    for (const auto& hh : hs) any = any || hh.counts[i] > 0;
    if (any)
      art.line("  locus bin " + std::to_string(i) + " at " + fmt_vec(nodes[i].point) + ": share nondecreasing as eps decreases: " +
               (locus_share_nondecreasing(hs, i) ? "yes" : "no"));
  }
}

inline void run_toyldp(const Block& b, const Rng& rng, int workers, Artifacts& art) {
  ToyModelConfig cfg;
  cfg.d = static_cast<int>(b.integer("d", cfg.d));
  cfg.alpha = b.number("alpha", cfg.alpha);
  cfg.beta = b.number("beta", cfg.beta);
  cfg.delta_min = b.number("delta_min", cfg.delta_min);
  cfg.eps_grid = b.grid("eps_grid", cfg.eps_grid);
  cfg.T = b.number("T", cfg.T);
  cfg.M = b.number("M", cfg.M);
  cfg.p = b.number("p", cfg.p);
  cfg.trials = b.integer("trials", cfg.trials);
  cfg.lattice = static_cast<int>(b.integer("lattice", cfg.lattice));
  cfg.truncation = b.number("truncation", cfg.truncation);
  cfg.workers = workers;
  auto u_grid = b.grid("u_grid", {2.0, 3.0, 4.0, 5.0});
  double u_cal = b.number("u_calibration", 2.0);
  long small_trials = b.integer("small_trials", 100000);
  double small_M = b.number("small_M", cfg.M);
  b.finish();
  cfg.validate();

  auto tail = timed(art, "single_jump_tail", [&] { return single_jump_tail(cfg, u_grid, u_cal); });
  art.table("tail", tail_csv(tail));
  bool dom = true;
  for (const auto& p : tail.points) dom = dom && p.dominates;
  art.line("single-jump tail: beta_big = " + fmt(tail.beta_big) + ", calibrated bound dominates on the grid: " +
           (dom ? "yes" : "no"));

  auto big = timed(art, "big_jump_scale", [&] { return big_jump_scale(cfg, rng.split(4), cfg.trials); });
  art.table("big_jumps", big_jump_csv(big, cfg.M));
  for (const auto& p : big.points)
    art.line("  big jumps eps=" + fmt(p.eps) + ": P(J > M) exact " + (p.exact ? fmt(*p.exact) : std::string("underflow")) +
             ", MC " + fmt(p.mc_p) + " (z = " + fmt(p.z_score) + "), below proxy + slack: " + (p.dominated ? "yes" : "no"));
  art.line(std::string("big jumps: eps ln P decreasing as eps decreases: ") + (big.eps_ln_decreasing ? "yes" : "no"));

  ToyModelConfig small_cfg = cfg;
  small_cfg.M = small_M;
  auto small = timed(art, "small_jump_scale", [&] { return small_jump_scale(small_cfg, rng.split(5), small_trials); });
  art.table("small_jumps", small_jump_csv(small, small_M));
  for (const auto& p : small)
    art.line("  small jumps eps=" + fmt(p.eps) + ": P(I > " + fmt(small_M) + ") = " + fmt(p.p_hat) +
             ", below the Chernoff bound: " + (p.dominated ? "yes" : "no"));
}

}  // namespace detail

// =============================================================================
// Entry points
// =============================================================================

/// Runs one experiment. `seed` and `workers` override the configuration;
/// without either source the seed is an error (no wall-clock seeding).
inline RunResult run(Kind kind, json cfg, std::optional<std::uint64_t> seed = std::nullopt,
                     std::optional<int> workers = std::nullopt) {
  if (!cfg.is_object()) throw ConfigError("config: top level must be an object");
  if (cfg.contains("kind")) {
    if (!cfg["kind"].is_string()) throw ConfigError("config field 'kind': expected a string");
    Kind declared = parse_kind(cfg["kind"].get<std::string>());
    if (declared != kind)
      throw ConfigError("config field 'kind': '" + kind_name(declared) + "' does not match the requested '" +
                        kind_name(kind) + "'");
  }
  cfg["kind"] = kind_name(kind);
  if (seed) cfg["seed"] = *seed;
  if (workers) cfg["workers"] = *workers;

  RunResult res;
  res.kind = kind;
  Block root(cfg, "");
  root.ignore("kind");
  root.ignore("output");
  if (!root.has("seed")) throw ConfigError("config field 'seed': missing (a master seed is mandatory)");
  const json& sj = root.raw("seed");
  if (!sj.is_number_unsigned() && !(sj.is_number_integer() && sj.get<long long>() >= 0))
    throw ConfigError("config field 'seed': expected a non-negative integer");
  res.seed = sj.get<std::uint64_t>();
  res.workers = static_cast<int>(root.integer("workers", 1));
  if (res.workers < 1) throw ConfigError("config field 'workers': must be >= 1");
  for (const auto& [k, n] : kind_names())
    if (k != kind && k != Kind::validate) root.ignore(n);

  json hashed = cfg;
  hashed.erase("workers");
  hashed.erase("output");
  res.config_hash = hex64(fnv1a64(hashed.dump()));
  res.config = cfg;

  Rng rng(res.seed);
  Artifacts& art = res.artifacts;
  if (kind == Kind::toyldp) {
    root.ignore("measure");
    root.ignore("system");
    root.ignore("validate");
    detail::run_toyldp(root.block("toyldp"), rng, res.workers, art);
    root.finish();
    return res;
  }

  // Every referenced block is read before any simulation starts.
  auto ctx = detail::system_context(root);
  std::optional<Block> kb;
  if (kind != Kind::validate) kb = root.block(kind_name(kind));
  root.ignore("validate");
  root.finish();
  detail::run_validation(ctx, root, rng, art);
  if (art.validation_failed || kind == Kind::validate) {
    if (art.validation_failed && kind != Kind::validate) art.line("aborted before simulation: hypothesis validation failed");
    return res;
  }
  switch (kind) {
    case Kind::average: detail::run_average(ctx, *kb, rng, res.workers, art); break;
    case Kind::simulate: detail::run_simulate(ctx, *kb, rng.split(6), res.workers, art); break;
    case Kind::action: detail::run_action(ctx, *kb, res.workers, art); break;
    case Kind::exit: detail::run_exit(ctx, *kb, rng, res.workers, art); break;
    default: break;
  }
  return res;
}

inline json manifest(const RunResult& r) {
  json m;
  m["program"] = "levyldp";
  m["version"] = kVersion;
  m["kind"] = kind_name(r.kind);
  m["seed"] = r.seed;
  m["workers"] = r.workers;
  m["config_hash"] = r.config_hash;
  m["config"] = r.config;
  m["status"] = r.artifacts.validation_failed ? "validation_failed" : "ok";
  m["failures"] = r.artifacts.failures;
  json t = json::object();
  for (const auto& [stage, sec] : r.artifacts.timings) t[stage] = sec;
  m["timings_seconds"] = t;
  json outs = json::object();
  for (const auto& [name, table] : r.artifacts.tables) outs[name + ".csv"] = hex64(fnv1a64(table.str()));
  m["outputs"] = outs;
  return m;
}

inline std::string summary_text(const RunResult& r) {
  std::ostringstream os;
  os << "levyldp " << kVersion << " - " << kind_name(r.kind) << "\n";
  os << "seed " << r.seed << ", workers " << r.workers << ", config hash " << r.config_hash << "\n";
  os << "status: " << (r.artifacts.validation_failed ? "validation failed" : "ok") << ", per-trial failures: "
     << r.artifacts.failures << "\n\n";
  for (const auto& l : r.artifacts.summary) os << l << "\n";
  if (!r.artifacts.tables.empty()) {
    os << "\ntables:";
    for (const auto& [name, t] : r.artifacts.tables) os << " " << name << ".csv(" << t.rows().size() << ")";
    os << "\n";
  }
  return os.str();
}

/// Writes every table as <name>.csv, manifest.json and summary.txt.
inline void write_artifacts(const std::filesystem::path& dir, const RunResult& r) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
  for (const auto& [name, table] : r.artifacts.tables) table.save((dir / (name + ".csv")).string());
  std::ofstream m(dir / "manifest.json", std::ios::binary);
  if (!m) throw Error("cannot write to output directory '" + dir.string() + "'");
  m << manifest(r).dump(2) << "\n";
  std::ofstream s(dir / "summary.txt", std::ios::binary);
  s << summary_text(r);
}

}  // namespace levyldp::experiment
