#include "fsel/app/config.hpp"

#include <omp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace fsel::app {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(out)) {
    throw ConfigError("expected a finite number, got '" + v + "'");
  }
  return out;
}

long long to_int(const std::string& v) {
  long long out = 0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) throw ConfigError("expected an integer, got '" + v + "'");
  return out;
}

std::uint64_t to_u64(const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) throw ConfigError("expected an unsigned integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("expected true/false, got '" + v + "'");
}

std::vector<double> to_list(const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(trim(item)));
  return out;
}

int to_int32(const std::string& v) {
  const long long x = to_int(v);
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
    throw ConfigError("integer out of range: " + v);
  }
  return static_cast<int>(x);
}

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

using Setter = std::function<void(AppConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto& s = t;
    s["scenario.radius"] = [](AppConfig& c, const std::string& v) { c.scenario.radius = to_double(v); };
    s["scenario.omega"] = [](AppConfig& c, const std::string& v) { c.scenario.omega = to_double(v); };
    s["scenario.omega_r"] = [](AppConfig& c, const std::string& v) { c.scenario.omega_r = to_double(v); };
    s["scenario.p0"] = [](AppConfig& c, const std::string& v) { c.scenario.p0 = to_double(v); };
    s["scenario.sigma"] = [](AppConfig& c, const std::string& v) { c.scenario.sigma = to_double(v); };
    s["scenario.process_noise"] = [](AppConfig& c, const std::string& v) {
      const auto d = to_list(v);
      if (d.size() != 3) throw ConfigError("process_noise needs three diagonal entries");
      c.scenario.process_noise = Vector3d(d[0], d[1], d[2]).asDiagonal();
    };
    s["scenario.initial_cov"] = [](AppConfig& c, const std::string& v) {
      const auto d = to_list(v);
      if (d.size() != 3) throw ConfigError("initial_cov needs three diagonal entries");
      c.scenario.initial_cov = Vector3d(d[0], d[1], d[2]).asDiagonal();
    };
    s["scenario.model_noise_floor"] = [](AppConfig& c, const std::string& v) {
      c.scenario.model_noise_floor = to_double(v);
    };
    s["scenario.T"] = [](AppConfig& c, const std::string& v) { c.scenario.horizon = to_int32(v); };
    s["scenario.horizons"] = [](AppConfig& c, const std::string& v) { c.scenario.horizons = to_int32(v); };
    s["scenario.restarts"] = [](AppConfig& c, const std::string& v) { c.scenario.restarts = to_int32(v); };
    s["scenario.landmarks"] = [](AppConfig& c, const std::string& v) { c.scenario.landmarks = to_int32(v); };
    s["scenario.seed"] = [](AppConfig& c, const std::string& v) { c.scenario.seed = to_u64(v); };
    s["scenario.fov_h"] = [](AppConfig& c, const std::string& v) { c.scenario.fov_h = to_double(v); };
    s["scenario.fov_v"] = [](AppConfig& c, const std::string& v) { c.scenario.fov_v = to_double(v); };
    s["scenario.landmark_inner"] = [](AppConfig& c, const std::string& v) { c.scenario.landmark_inner = to_double(v); };
    s["scenario.landmark_outer"] = [](AppConfig& c, const std::string& v) { c.scenario.landmark_outer = to_double(v); };
    s["scenario.landmark_height"] = [](AppConfig& c, const std::string& v) {
      c.scenario.landmark_height = to_double(v);
    };
    s["scenario.budget_fraction"] = [](AppConfig& c, const std::string& v) {
      c.scenario.budget_fraction = to_double(v);
    };
    s["scenario.measure"] = [](AppConfig& c, const std::string& v) {
      try {
        c.scenario.measure = parse_measure(v);
      } catch (const std::exception& e) {
        throw ConfigError(e.what());
      }
    };
    s["scenario.cross_mode"] = [](AppConfig& c, const std::string& v) {
      if (v == "standard") {
        c.scenario.cross_mode = CrossMode::kStandard;
      } else if (v == "paper-literal") {
        c.scenario.cross_mode = CrossMode::kPaperLiteral;
      } else {
        throw ConfigError("cross_mode must be standard or paper-literal, got '" + v + "'");
      }
    };
    s["scenario.sample_initial_truth"] = [](AppConfig& c, const std::string& v) {
      c.scenario.sample_initial_truth = to_bool(v);
    };
    s["scenario.driver"] = [](AppConfig& c, const std::string& v) {
      try {
        c.scenario.driver = parse_method(v);
      } catch (const std::exception& e) {
        throw ConfigError(e.what());
      }
    };
    s["scenario.epsilon"] = [](AppConfig& c, const std::string& v) { c.scenario.epsilon = to_double(v); };

    s["certify.features"] = [](AppConfig& c, const std::string& v) { c.certify.features = to_int32(v); };
    s["certify.T"] = [](AppConfig& c, const std::string& v) { c.certify.horizon = to_int32(v); };
    s["certify.epsilon"] = [](AppConfig& c, const std::string& v) { c.certify.epsilon = to_double(v); };
    s["certify.q"] = [](AppConfig& c, const std::string& v) { c.certify.q = to_int32(v); };
    s["certify.seeds"] = [](AppConfig& c, const std::string& v) { c.certify.seeds = to_int32(v); };
    s["certify.instance_seed"] = [](AppConfig& c, const std::string& v) { c.certify.instance_seed = to_u64(v); };

    s["scaling.n_values"] = [](AppConfig& c, const std::string& v) {
      c.scaling.n_values.clear();
      for (double x : to_list(v)) {
        if (x != std::floor(x)) throw ConfigError("n_values must be integers");
        c.scaling.n_values.push_back(static_cast<int>(x));
      }
    };
    s["scaling.q_fraction"] = [](AppConfig& c, const std::string& v) { c.scaling.q_fraction = to_double(v); };
    s["scaling.trials"] = [](AppConfig& c, const std::string& v) { c.scaling.trials = to_int32(v); };
    s["scaling.T"] = [](AppConfig& c, const std::string& v) { c.scaling.horizon = to_int32(v); };
    s["scaling.restarts"] = [](AppConfig& c, const std::string& v) { c.scaling.restarts = to_int32(v); };
    s["scaling.instance_seed"] = [](AppConfig& c, const std::string& v) { c.scaling.instance_seed = to_u64(v); };

    s["output.out_dir"] = [](AppConfig& c, const std::string& v) { c.output.out_dir = v; };
    s["output.csv_only"] = [](AppConfig& c, const std::string& v) { c.output.csv_only = to_bool(v); };
    s["output.workers"] = [](AppConfig& c, const std::string& v) { c.output.workers = to_int32(v); };
    return t;
  }();
  return table;
}

void validate_sections(const AppConfig& c) {
  if (c.certify.features < 2 || c.certify.horizon < 1 || c.certify.seeds < 1 || c.certify.q < 0) {
    throw ConfigError("certify: features >= 2, T >= 1, seeds >= 1, q >= 0 required");
  }
  if (!(c.certify.epsilon > 0.0 && c.certify.epsilon < 1.0)) throw ConfigError("certify: epsilon must lie in (0, 1)");
  if (c.scaling.n_values.empty()) throw ConfigError("scaling: n_values must not be empty");
  for (std::size_t i = 0; i < c.scaling.n_values.size(); ++i) {
    if (c.scaling.n_values[i] < 2) throw ConfigError("scaling: every N must be >= 2");
    if (i > 0 && c.scaling.n_values[i] <= c.scaling.n_values[i - 1]) {
      throw ConfigError("scaling: n_values must be strictly increasing");
    }
  }
  if (!(c.scaling.q_fraction > 0.0 && c.scaling.q_fraction <= 1.0)) {
    throw ConfigError("scaling: q_fraction must lie in (0, 1]");
  }
  if (c.scaling.trials < 1 || c.scaling.horizon < 1 || c.scaling.restarts < 1) {
    throw ConfigError("scaling: trials, T and restarts must be >= 1");
  }
  if (c.output.workers < 0) throw ConfigError("output: workers must be >= 0");
}

}  // namespace

void set_value(AppConfig& cfg, const std::string& section, const std::string& key, const std::string& value) {
  const std::string full = (section.empty() ? std::string("scenario") : section) + "." + key;
  const auto& table = setters();
  const auto it = table.find(full);
  if (it == table.end()) throw ConfigError("unknown key '" + full + "'");
  it->second(cfg, value);
}

AppConfig parse_config(const std::string& text, const std::string& source, AppConfig base) {
  std::istringstream in(text);
  std::string line;
  std::string section = "scenario";
  int lineno = 0;
  const auto where = [&] { return source + ":" + std::to_string(lineno) + ": "; };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where() + "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section != "scenario" && section != "certify" && section != "scaling" && section != "output" &&
          section != "manifest") {
        throw ConfigError(where() + "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where() + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where() + "empty key");
    // A manifest's own bookkeeping section is informational.
    if (section == "manifest") continue;
    try {
      set_value(base, section, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where() + e.what());
    }
  }
  try {
    validate(base);
  } catch (const std::exception& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return base;
}

AppConfig load_config(const std::string& path, AppConfig base) {
  std::ifstream f(path);
  if (!f) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path, std::move(base));
}

void validate(const AppConfig& cfg) {
  try {
    cfg.scenario.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  validate_sections(cfg);
}

std::string serialize(const AppConfig& c) {
  std::ostringstream o;
  const auto& s = c.scenario;
  const auto diag = [](const Matrix3d& m) { return fmt(m(0, 0)) + ", " + fmt(m(1, 1)) + ", " + fmt(m(2, 2)); };
  o << "[scenario]\n";
  o << "radius = " << fmt(s.radius) << "\n";
  o << "omega = " << fmt(s.omega) << "\n";
  o << "omega_r = " << fmt(s.omega_r) << "\n";
  o << "p0 = " << fmt(s.p0) << "\n";
  o << "sigma = " << fmt(s.sigma) << "\n";
  o << "process_noise = " << diag(s.process_noise) << "\n";
  o << "initial_cov = " << diag(s.initial_cov) << "\n";
  o << "model_noise_floor = " << fmt(s.model_noise_floor) << "\n";
  o << "T = " << s.horizon << "\n";
  o << "horizons = " << s.horizons << "\n";
  o << "restarts = " << s.restarts << "\n";
  o << "landmarks = " << s.landmarks << "\n";
  o << "seed = " << s.seed << "\n";
  o << "fov_h = " << fmt(s.fov_h) << "\n";
  o << "fov_v = " << fmt(s.fov_v) << "\n";
  o << "landmark_inner = " << fmt(s.landmark_inner) << "\n";
  o << "landmark_outer = " << fmt(s.landmark_outer) << "\n";
  o << "landmark_height = " << fmt(s.landmark_height) << "\n";
  o << "budget_fraction = " << fmt(s.budget_fraction) << "\n";
  o << "measure = " << to_string(s.measure) << "\n";
  o << "cross_mode = " << to_string(s.cross_mode) << "\n";
  o << "sample_initial_truth = " << (s.sample_initial_truth ? "true" : "false") << "\n";
  o << "driver = " << to_string(s.driver) << "\n";
  o << "epsilon = " << fmt(s.epsilon) << "\n";
  o << "\n[certify]\n";
  o << "features = " << c.certify.features << "\n";
  o << "T = " << c.certify.horizon << "\n";
  o << "epsilon = " << fmt(c.certify.epsilon) << "\n";
  o << "q = " << c.certify.q << "\n";
  o << "seeds = " << c.certify.seeds << "\n";
  o << "instance_seed = " << c.certify.instance_seed << "\n";
  o << "\n[scaling]\n";
  o << "n_values = ";
  for (std::size_t i = 0; i < c.scaling.n_values.size(); ++i) o << (i ? ", " : "") << c.scaling.n_values[i];
  o << "\n";
  o << "q_fraction = " << fmt(c.scaling.q_fraction) << "\n";
  o << "trials = " << c.scaling.trials << "\n";
  o << "T = " << c.scaling.horizon << "\n";
  o << "restarts = " << c.scaling.restarts << "\n";
  o << "instance_seed = " << c.scaling.instance_seed << "\n";
  return o.str();
}

std::string fnv1a_hex(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string content_hash(const AppConfig& cfg) { return fnv1a_hex(serialize(cfg)); }

int resolved_workers(const OutputConfig& out) { return out.workers > 0 ? out.workers : omp_get_num_procs(); }

}  // namespace fsel::app
