#pragma once

// Flat key = value configuration with [sections]. Unknown keys are errors;
// messages carry the file name and line number.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fsel/simenv.hpp"

namespace fsel::app {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CertifyConfig {
  int features = 60;
  int horizon = 1;
  double epsilon = 0.5;
  int q = 0;  // 0: ceil(n ln n / eps^2)
  int seeds = 400;
  std::uint64_t instance_seed = 11;
};

struct ScalingConfig {
  std::vector<int> n_values{64, 128, 256, 512, 1024};
  double q_fraction = 0.5;
  int trials = 3;
  int horizon = 4;
  int restarts = 4;
  std::uint64_t instance_seed = 5;
};

struct OutputConfig {
  std::string out_dir = "out";
  bool csv_only = false;
  int workers = 0;  // 0: all available processors
};

struct AppConfig {
  ScenarioConfig scenario = ScenarioConfig::desk_scale();
  CertifyConfig certify;
  ScalingConfig scaling;
  OutputConfig output;
};

/// Applies the file's entries on top of `base`. Throws ConfigError.
AppConfig parse_config(const std::string& text, const std::string& source, AppConfig base = {});
AppConfig load_config(const std::string& path, AppConfig base = {});

/// Assigns one `section.key` (or bare scenario key) from its textual value.
void set_value(AppConfig& cfg, const std::string& section, const std::string& key, const std::string& value);

/// Canonical text: fixed key order, round-trip precision. Parsing it back
/// yields the same canonical text.
std::string serialize(const AppConfig& cfg);

/// 64-bit FNV-1a over the canonical text, as 16 hex digits.
std::string content_hash(const AppConfig& cfg);
std::string fnv1a_hex(const std::string& bytes);

/// Range checks for every section. Throws ConfigError.
void validate(const AppConfig& cfg);

int resolved_workers(const OutputConfig& out);

}  // namespace fsel::app
