// levyldp_cli: runs one experiment from a configuration file and writes
// manifest.json, one CSV per result table and summary.txt.
//
// Exit status: 0 success, 1 configuration or usage error, 2 hypothesis
// validation failed, 3 runtime failure.

#include "levyldp/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace ex = levyldp::experiment;

int main(int argc, char** argv) {
  CLI::App app{"levyldp: slow-fast jump systems, averaging and large deviations experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ex::kVersion));

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int workers = 1;
  std::vector<std::string> overrides;

  const std::vector<std::pair<ex::Kind, std::string>> help{
      {ex::Kind::validate, "check the measure and the structural hypotheses"},
      {ex::Kind::average, "estimate the averaged coefficient and the averaging-principle exceedances"},
      {ex::Kind::simulate, "simulate slow-fast paths next to the averaged equation"},
      {ex::Kind::action, "minimize the action: rate function, quasi-potential, potential height"},
      {ex::Kind::exit, "Monte Carlo exit times and exit loci from a domain"},
      {ex::Kind::toyldp, "pure-jump toy model: single-, big- and small-jump tails"}};
  std::vector<std::pair<CLI::App*, ex::Kind>> subs;
  for (const auto& [kind, text] : help) {
    CLI::App* sub = app.add_subcommand(ex::kind_name(kind), text);
    sub->add_option("--config", config_path, "experiment configuration (JSON, or a previous manifest.json)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "master seed (overrides the config)");
    sub->add_option("--workers", workers, "worker threads (overrides the config)")->check(CLI::PositiveNumber);
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--override", overrides, "key=value, dotted keys address blocks (repeatable)");
    subs.emplace_back(sub, kind);
  }

  CLI11_PARSE(app, argc, argv);

  ex::Kind kind = ex::Kind::validate;
  CLI::App* active = nullptr;
  for (const auto& [sub, k] : subs)
    if (sub->parsed()) {
      kind = k;
      active = sub;
    }

  try {
    ex::json cfg = ex::load_config(config_path);
    for (const auto& kv : overrides) ex::apply_override(cfg, kv);
    std::optional<std::uint64_t> seed_opt;
    std::optional<int> workers_opt;
    if (active->count("--seed")) seed_opt = seed;
    if (active->count("--workers")) workers_opt = workers;
    if (out_dir.empty()) {
      if (!cfg.contains("output") || !cfg["output"].is_string())
        throw ex::ConfigError("config field 'output': missing (or pass --out)");
      out_dir = cfg["output"].get<std::string>();
    }
    cfg["output"] = out_dir;

    ex::RunResult r = ex::run(kind, cfg, seed_opt, workers_opt);
    ex::write_artifacts(out_dir, r);
    std::cout << ex::summary_text(r);
    std::cout << "artifacts written to " << out_dir << "\n";
    return r.artifacts.validation_failed ? 2 : 0;
  } catch (const levyldp::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << "\n";
    return 3;
  }
}
