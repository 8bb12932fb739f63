#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "fsel/app/config.hpp"
#include "fsel/simenv.hpp"

namespace fsel::app {

enum ExitCode { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

/// Everything `run` writes, assembled in memory first so a failed run leaves
/// no partial outputs.
struct RunArtifacts {
  std::string hash;
  std::string horizon_csv;
  std::string kappa_csv;
  std::vector<std::pair<std::string, std::string>> plots;  // file name, SVG
  BenchmarkResult result;
};

RunArtifacts build_run_artifacts(const AppConfig& cfg, bool with_plots);

/// Runs the benchmark and writes manifest.txt, horizons.csv, kappa_cdf.csv and
/// (unless csv_only) SVG plots into cfg.output.out_dir.
int cmd_run(const AppConfig& cfg, std::ostream& log);

struct CertifyOutcome {
  int n = 0;
  int q = 0;
  int candidates = 0;
  CertificationReport report;
  bool passed = false;
};

CertifyOutcome run_certify(const CertifyConfig& cfg);
int cmd_certify(const AppConfig& cfg, std::ostream& log, bool write_csv);

struct ScalingRow {
  int n = 0;
  int q = 0;
  double leverage_median = 0.0;
  double greedy_median = 0.0;
  double ratio() const { return greedy_median / leverage_median; }
};

struct ScalingReport {
  std::vector<ScalingRow> rows;
  bool fitted = false;  // needs at least two N values
  double leverage_slope = 0.0;
  double greedy_slope = 0.0;
  bool ratio_monotone = false;
};

/// Least-squares slope of log y against log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

ScalingReport run_scaling(const ScalingConfig& cfg, int workers);
int cmd_scaling(const AppConfig& cfg, std::ostream& log, bool write_files, bool check);

int cmd_selftest(const std::string& inject, std::ostream& log);

}  // namespace fsel::app
