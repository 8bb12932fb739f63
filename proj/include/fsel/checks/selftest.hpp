#pragma once

#include <string>
#include <vector>

namespace fsel::checks {

struct CheckResult {
  std::string module;
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SelftestOptions {
  /// Name of one check whose tolerance is replaced by an impossible one.
  std::string inject;
  unsigned long seed = 20240601;
};

std::vector<std::string> selftest_names();
std::vector<CheckResult> run_selftest(const SelftestOptions& opts = {});

}  // namespace fsel::checks
