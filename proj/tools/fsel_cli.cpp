// Command-line driver: run, certify, scaling, selftest.

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "fsel/app/commands.hpp"
#include "fsel/app/config.hpp"
#include "fsel/error.hpp"

namespace {

using fsel::app::AppConfig;

struct Common {
  std::string config;
  bool paper_scale = false;
  // (section, key, value) in command-line order.
  std::vector<std::tuple<std::string, std::string, std::string>> overrides;
};

void add_override(CLI::App* cmd, Common& common, const std::string& flag, const std::string& section,
                  const std::string& key, const std::string& help) {
  cmd->add_option_function<std::string>(
      flag, [&common, section, key](const std::string& v) { common.overrides.emplace_back(section, key, v); }, help);
}

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--config", common.config, "key = value config file with [sections]");
  cmd->add_flag("--paper-scale", common.paper_scale, "start from the full-size scenario parameters");
  add_override(cmd, common, "--seed", "scenario", "seed", "master seed");
  add_override(cmd, common, "--workers", "output", "workers", "worker threads (0: all processors)");
  add_override(cmd, common, "--out-dir", "output", "out_dir", "output directory");
  cmd->add_flag_callback("--csv-only", [&common] { common.overrides.emplace_back("output", "csv_only", "true"); },
                         "skip SVG plots");
}

void add_scenario_flags(CLI::App* cmd, Common& c) {
  const std::pair<const char*, const char*> flags[] = {
      {"--radius", "radius"},
      {"--omega", "omega"},
      {"--omega-r", "omega_r"},
      {"--p0", "p0"},
      {"--sigma", "sigma"},
      {"--process-noise", "process_noise"},
      {"--initial-cov", "initial_cov"},
      {"--model-noise-floor", "model_noise_floor"},
      {"--T", "T"},
      {"--horizons", "horizons"},
      {"--restarts", "restarts"},
      {"--landmarks", "landmarks"},
      {"--fov-h", "fov_h"},
      {"--fov-v", "fov_v"},
      {"--landmark-inner", "landmark_inner"},
      {"--landmark-outer", "landmark_outer"},
      {"--landmark-height", "landmark_height"},
      {"--budget-fraction", "budget_fraction"},
      {"--measure", "measure"},
      {"--cross-mode", "cross_mode"},
      {"--sample-initial-truth", "sample_initial_truth"},
      {"--driver", "driver"},
      {"--epsilon", "epsilon"},
  };
  for (const auto& [flag, key] : flags) add_override(cmd, c, flag, "scenario", key, std::string("scenario.") + key);
}

AppConfig resolve(const Common& c) {
  AppConfig cfg;
  if (c.paper_scale) cfg.scenario = fsel::ScenarioConfig::paper_scale();
  if (!c.config.empty()) cfg = fsel::app::load_config(c.config, cfg);
  for (const auto& [section, key, value] : c.overrides) {
    try {
      fsel::app::set_value(cfg, section, key, value);
    } catch (const fsel::app::ConfigError& e) {
      throw fsel::app::ConfigError("command line: " + std::string(e.what()));
    }
  }
  fsel::app::validate(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feature selection benchmark: leverage-score sampling vs greedy and uniform"};
  app.require_subcommand(1);
  Common common;

  auto* run = app.add_subcommand("run", "closed-loop benchmark; writes manifest, CSVs and plots");
  add_common(run, common);
  add_scenario_flags(run, common);

  auto* cert = app.add_subcommand("certify", "seeded analysis-mode selections against the approximation bounds");
  add_common(cert, common);
  add_override(cert, common, "--features", "certify", "features", "candidate count N");
  add_override(cert, common, "--T", "certify", "T", "horizon length");
  add_override(cert, common, "--epsilon", "certify", "epsilon", "epsilon in (0, 1)");
  add_override(cert, common, "--q", "certify", "q", "budget (0: ceil(n ln n / eps^2))");
  add_override(cert, common, "--seeds", "certify", "seeds", "number of seeded runs");
  add_override(cert, common, "--instance-seed", "certify", "instance_seed", "seed of the fixed instance");
  bool cert_csv = false;
  cert->add_flag("--csv", cert_csv, "write per-seed certify.csv into --out-dir");

  auto* scal = app.add_subcommand("scaling", "median selection time against N with log-log slopes");
  add_common(scal, common);
  add_override(scal, common, "--n", "scaling", "n_values", "comma-separated increasing N values");
  add_override(scal, common, "--q-fraction", "scaling", "q_fraction", "q = round(fraction * N)");
  add_override(scal, common, "--trials", "scaling", "trials", "timed trials per N");
  add_override(scal, common, "--T", "scaling", "T", "horizon length");
  add_override(scal, common, "--restarts", "scaling", "restarts", "sampler restarts p");
  bool scal_write = false, scal_check = false;
  scal->add_flag("--write", scal_write, "write scaling.csv (and scaling.svg) into --out-dir");
  scal->add_flag("--check", scal_check, "exit 1 unless leverage slope <= 1.3, greedy slope >= 1.7, ratio monotone");

  auto* self = app.add_subcommand("selftest", "every oracle and invariant check");
  std::string inject;
  self->add_option("--inject", inject, "force one named check to fail (tolerance corruption)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : fsel::app::kExitUsage;
  }

  try {
    if (self->parsed()) return fsel::app::cmd_selftest(inject, std::cout);
    const AppConfig cfg = resolve(common);
    if (run->parsed()) return fsel::app::cmd_run(cfg, std::cout);
    if (cert->parsed()) return fsel::app::cmd_certify(cfg, std::cout, cert_csv);
    if (scal->parsed()) return fsel::app::cmd_scaling(cfg, std::cout, scal_write, scal_check);
  } catch (const fsel::app::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return fsel::app::kExitUsage;
  } catch (const fsel::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == fsel::ErrorKind::kConfig ? fsel::app::kExitUsage : fsel::app::kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return fsel::app::kExitFailure;
  }
  return fsel::app::kExitUsage;
}
