#include "fsel/app/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <map>
#include <ostream>

#include "fsel/app/report.hpp"
#include "fsel/checks/oracles.hpp"
#include "fsel/checks/selftest.hpp"

namespace fsel::app {

namespace {

namespace fs = std::filesystem;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string str(int v) { return std::to_string(v); }
std::string str(std::uint64_t v) { return std::to_string(v); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

RunArtifacts build_run_artifacts(const AppConfig& cfg, bool with_plots) {
  RunArtifacts out;
  out.hash = content_hash(cfg);
  const Exec exec{resolved_workers(cfg.output)};
  out.result = run_benchmark(cfg.scenario, exec);
  const std::string kind = to_string(cfg.scenario.measure);

  CsvTable rows({"horizon", "method", "measure_kind", "measure_value", "theta", "phi", "kappa", "q", "N_t",
                 "elapsed_s", "seed", "manifest"});
  for (const auto& r : out.result.records) {
    struct Entry {
      const char* method;
      double measure, theta, phi, kappa, elapsed;
    };
    // Greedy is the reference for the relative gap and the CPU ratio.
    const Entry entries[] = {
        {"leverage", r.measure, r.theta, r.phi, r.kappa, r.elapsed},
        {"uniform", r.measure_u, r.theta_u, r.phi_u, r.kappa_u, r.elapsed_u},
        {"greedy", r.measure_g, r.theta_g, 0.0, 1.0, r.elapsed_g},
    };
    for (const auto& e : entries) {
      rows.add({str(r.horizon), e.method, kind, format_number(e.measure), format_number(e.theta),
                format_number(e.phi), format_number(e.kappa), str(r.q), str(r.n_candidates),
                format_number(e.elapsed), str(r.seed), out.hash});
    }
  }
  out.horizon_csv = rows.str();

  CsvTable cdf({"method", "kappa", "fraction", "manifest"});
  for (const auto& p : out.result.kappa_cdf) {
    cdf.add({"leverage", format_number(p.value), format_number(p.fraction), out.hash});
  }
  for (const auto& p : out.result.kappa_u_cdf) {
    cdf.add({"uniform", format_number(p.value), format_number(p.fraction), out.hash});
  }
  out.kappa_csv = cdf.str();

  if (with_plots) {
    const std::string desc = "manifest " + out.hash;
    Series lev{"leverage", {}, {}, false}, uni{"uniform", {}, {}, false}, gre{"greedy", {}, {}, false};
    Series tlev = lev, tuni = uni, tgre = gre;
    for (const auto& r : out.result.records) {
      const double h = r.horizon;
      lev.x.push_back(h), lev.y.push_back(r.measure);
      uni.x.push_back(h), uni.y.push_back(r.measure_u);
      gre.x.push_back(h), gre.y.push_back(r.measure_g);
      tlev.x.push_back(h), tlev.y.push_back(r.theta);
      tuni.x.push_back(h), tuni.y.push_back(r.theta_u);
      tgre.x.push_back(h), tgre.y.push_back(r.theta_g);
    }
    out.plots.emplace_back("measure_trace.svg",
                           render_svg({"Estimation measure per horizon", "horizon", kind, false, true, desc},
                                      {lev, uni, gre}));
    out.plots.emplace_back("theta_trace.svg",
                           render_svg({"Position RMSE per horizon", "horizon", "theta", false, false, desc},
                                      {tlev, tuni, tgre}));
    Series klev{"leverage", {}, {}, true}, kuni{"uniform", {}, {}, true};
    for (const auto& p : out.result.kappa_cdf) klev.x.push_back(p.value), klev.y.push_back(p.fraction);
    for (const auto& p : out.result.kappa_u_cdf) kuni.x.push_back(p.value), kuni.y.push_back(p.fraction);
    out.plots.emplace_back("kappa_cdf.svg",
                           render_svg({"CPU time ratio to greedy", "kappa", "empirical CDF", true, false, desc},
                                      {klev, kuni}));
  }
  return out;
}

int cmd_run(const AppConfig& cfg, std::ostream& log) {
  const std::string start = utc_now();
  const RunArtifacts art = build_run_artifacts(cfg, !cfg.output.csv_only);
  const std::string end = utc_now();

  const fs::path dir(cfg.output.out_dir);
  fs::create_directories(dir);
  const fs::path horizons = dir / "horizons.csv";
  const fs::path kappa = dir / "kappa_cdf.csv";
  std::string manifest = "[manifest]\n";
  manifest += "hash = " + art.hash + "\n";
  manifest += "master_seed = " + std::to_string(cfg.scenario.seed) + "\n";
  manifest += "workers = " + std::to_string(resolved_workers(cfg.output)) + "\n";
  manifest += "start = " + start + "\n";
  manifest += "end = " + end + "\n";
  manifest += "horizon_csv = " + horizons.string() + "\n";
  manifest += "kappa_csv = " + kappa.string() + "\n";
  for (const auto& [name, svg] : art.plots) manifest += "plot = " + (dir / name).string() + "\n";
  manifest += "realized_turns = " + format_number(art.result.realized_turns) + "\n\n";
  manifest += serialize(cfg);

  write_file(horizons.string(), art.horizon_csv);
  write_file(kappa.string(), art.kappa_csv);
  for (const auto& [name, svg] : art.plots) write_file((dir / name).string(), svg);
  write_file((dir / "manifest.txt").string(), manifest);

  std::vector<double> gap_l, gap_u, phi_l, phi_u, kap;
  for (const auto& r : art.result.records) {
    gap_l.push_back(r.measure - r.measure_g);
    gap_u.push_back(r.measure_u - r.measure_g);
    phi_l.push_back(r.phi);
    phi_u.push_back(r.phi_u);
    kap.push_back(r.kappa);
  }
  log << "horizons " << art.result.records.size() << ", manifest " << art.hash << "\n";
  log << "median measure gap to greedy: leverage " << median(gap_l) << ", uniform " << median(gap_u) << "\n";
  log << "median phi (%): leverage " << median(phi_l) << ", uniform " << median(phi_u) << "\n";
  log << "median kappa (leverage / greedy CPU time): " << median(kap) << "\n";
  log << "outputs in " << dir.string() << "\n";
  return kExitOk;
}

CertifyOutcome run_certify(const CertifyConfig& cfg) {
  CertifyOutcome out;
  checks::InstanceOptions opts;
  opts.features = cfg.features;
  opts.horizon = cfg.horizon;
  Rng rng(derive_seed(cfg.instance_seed, "certify-instance"));
  const auto inst = checks::random_instance(rng, opts);
  out.n = static_cast<int>(inst.set.dim());
  out.candidates = inst.set.size();
  const double n = out.n;
  out.q = cfg.q > 0 ? cfg.q : static_cast<int>(std::ceil(n * std::log(n) / (cfg.epsilon * cfg.epsilon)));
  if (out.q > out.candidates) {
    throw ConfigError("certify: q = " + std::to_string(out.q) + " exceeds N = " + std::to_string(out.candidates) +
                      "; raise features or epsilon");
  }
  out.report = certify(inst.set, out.q, cfg.epsilon, cfg.seeds, derive_seed(cfg.instance_seed, "certify-runs"));
  const auto& fs_row = out.report.full_set;
  out.passed = out.report.pass_rate >= 0.25 && out.report.implication_holds && fs_row.loewner && fs_row.measures_pass();
  return out;
}

int cmd_certify(const AppConfig& cfg, std::ostream& log, bool write_csv) {
  const CertifyOutcome o = run_certify(cfg.certify);
  const auto& r = o.report;
  log << "instance: N = " << o.candidates << ", n = " << o.n << ", q = " << o.q << ", eps = " << r.eps
      << " (n ln n / eps^2 = " << r.n_log_n_over_eps2 << ")\n";
  log << "chi_bar = " << r.chi_bar << " +/- " << r.chi_stderr << " over " << r.chi.size() << " seeds\n";
  int loewner = 0, measures = 0, literal = 0;
  for (const auto& c : r.runs) {
    loewner += c.loewner;
    measures += c.measures_pass();
    literal += c.literal_v && c.literal_e && c.literal_lambda;
  }
  log << "Loewner bound held on " << loewner << "/" << r.runs.size() << " seeds, pass rate " << r.pass_rate
      << " (floor 0.25)\n";
  log << "measure-loss bounds held on " << measures << " seeds; as-printed inequalities on " << literal << "\n";
  log << "implication (Loewner => measure bounds): " << (r.implication_holds ? "holds" : "VIOLATED") << "\n";
  log << "full-set row: " << (r.full_set.loewner && r.full_set.measures_pass() ? "pass" : "FAIL") << "\n";

  if (write_csv) {
    const std::string hash = content_hash(cfg);
    CsvTable t({"seed_index", "chi", "loewner", "pass_v", "pass_e", "pass_lambda", "loss_v", "bound_v", "loss_e",
                "bound_e", "loss_lambda", "bound_lambda", "manifest"});
    const auto b = [](bool v) { return std::string(v ? "1" : "0"); };
    for (std::size_t s = 0; s < r.runs.size(); ++s) {
      const auto& c = r.runs[s];
      t.add({std::to_string(s), format_number(r.chi[s]), b(c.loewner), b(c.pass_v), b(c.pass_e), b(c.pass_lambda),
             format_number(c.loss_v), format_number(c.bound_v), format_number(c.loss_e), format_number(c.bound_e),
             format_number(c.loss_lambda), format_number(c.bound_lambda), hash});
    }
    fs::create_directories(cfg.output.out_dir);
    const fs::path path = fs::path(cfg.output.out_dir) / "certify.csv";
    write_file(path.string(), t.str());
    log << "per-seed results in " << path.string() << "\n";
  }
  log << (o.passed ? "PASS" : "FAIL") << "\n";
  return o.passed ? kExitOk : kExitFailure;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t m = x.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly;
  }
  const double d = static_cast<double>(m) * sxx - sx * sx;
  return (static_cast<double>(m) * sxy - sx * sy) / d;
}

ScalingReport run_scaling(const ScalingConfig& cfg, int workers) {
  ScalingReport rep;
  const Exec exec{workers};
  for (int n : cfg.n_values) {
    checks::InstanceOptions opts;
    opts.features = n;
    opts.horizon = cfg.horizon;
    Rng rng(derive_seed(cfg.instance_seed, "scaling-instance", static_cast<std::uint64_t>(n)));
    const auto inst = checks::random_instance(rng, opts);
    ScalingRow row;
    row.n = n;
    row.q = std::max(1, static_cast<int>(std::lround(cfg.q_fraction * n)));
    std::vector<double> lev, gre;
    for (int t = 0; t < cfg.trials; ++t) {
      const auto seed = derive_seed(cfg.instance_seed, "scaling-run", static_cast<std::uint64_t>(t));
      lev.push_back(best_of_restarts(inst.set, row.q, Measure::kVariance, cfg.restarts, seed, exec).elapsed);
      gre.push_back(greedy_select(inst.set, row.q, Measure::kVariance, exec).elapsed);
    }
    row.leverage_median = std::max(median(lev), 1e-9);
    row.greedy_median = std::max(median(gre), 1e-9);
    rep.rows.push_back(row);
  }
  if (rep.rows.size() >= 2) {
    std::vector<double> x, yl, yg;
    for (const auto& r : rep.rows) x.push_back(r.n), yl.push_back(r.leverage_median), yg.push_back(r.greedy_median);
    rep.fitted = true;
    rep.leverage_slope = loglog_slope(x, yl);
    rep.greedy_slope = loglog_slope(x, yg);
    rep.ratio_monotone = true;
    for (std::size_t i = 1; i < rep.rows.size(); ++i) {
      if (!(rep.rows[i].ratio() > rep.rows[i - 1].ratio())) rep.ratio_monotone = false;
    }
  }
  return rep;
}

int cmd_scaling(const AppConfig& cfg, std::ostream& log, bool write_files, bool check) {
  const ScalingReport rep = run_scaling(cfg.scaling, resolved_workers(cfg.output));
  const std::string hash = content_hash(cfg);
  CsvTable t({"N", "q", "leverage_median_s", "greedy_median_s", "ratio", "manifest"});
  log << "       N        q   leverage_s     greedy_s    ratio\n";
  for (const auto& r : rep.rows) {
    char line[128];
    std::snprintf(line, sizeof line, "%8d %8d %12.6f %12.6f %8.2f\n", r.n, r.q, r.leverage_median, r.greedy_median,
                  r.ratio());
    log << line;
    t.add({std::to_string(r.n), std::to_string(r.q), format_number(r.leverage_median),
           format_number(r.greedy_median), format_number(r.ratio()), hash});
  }
  if (rep.fitted) {
    log << "log-log slope: leverage " << rep.leverage_slope << ", greedy " << rep.greedy_slope << "\n";
    log << "greedy/leverage ratio monotone: " << (rep.ratio_monotone ? "yes" : "no") << "\n";
  } else {
    log << "single N value: no fit\n";
  }
  if (write_files) {
    fs::create_directories(cfg.output.out_dir);
    write_file((fs::path(cfg.output.out_dir) / "scaling.csv").string(), t.str());
    if (!cfg.output.csv_only) {
      Series l{"leverage", {}, {}, false}, g{"greedy", {}, {}, false};
      for (const auto& r : rep.rows) {
        l.x.push_back(r.n), l.y.push_back(r.leverage_median);
        g.x.push_back(r.n), g.y.push_back(r.greedy_median);
      }
      write_file((fs::path(cfg.output.out_dir) / "scaling.svg").string(),
                 render_svg({"Median selection time", "N", "seconds", true, true, "manifest " + hash}, {l, g}));
    }
  }
  if (!check) return kExitOk;
  const bool ok = rep.fitted && rep.leverage_slope <= 1.3 && rep.greedy_slope >= 1.7 && rep.ratio_monotone;
  log << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? kExitOk : kExitFailure;
}

int cmd_selftest(const std::string& inject, std::ostream& log) {
  checks::SelftestOptions opts;
  opts.inject = inject;
  if (!inject.empty()) {
    const auto names = checks::selftest_names();
    const bool known = std::any_of(names.begin(), names.end(), [&](const std::string& n) {
      return n == inject || n.substr(n.find('.') + 1) == inject;
    });
    if (!known) {
      log << "unknown check '" << inject << "'\n";
      return kExitUsage;
    }
  }
  const auto results = checks::run_selftest(opts);
  std::map<std::string, std::pair<int, int>> per_module;  // passed, total
  int failed = 0;
  for (const auto& r : results) {
    log << (r.passed ? "PASS " : "FAIL ") << r.module << "." << r.name << ": " << r.detail << "\n";
    auto& [p, n] = per_module[r.module];
    p += r.passed;
    ++n;
    failed += !r.passed;
  }
  for (const auto& [module, counts] : per_module) {
    log << module << ": " << counts.first << "/" << counts.second << " passed\n";
  }
  log << (failed ? std::to_string(failed) + " check(s) failed" : std::string("all checks passed")) << "\n";
  return failed ? kExitFailure : kExitOk;
}

}  // namespace fsel::app
