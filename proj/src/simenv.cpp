#include "fsel/simenv.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fsel/estimator.hpp"

namespace fsel {

ScenarioConfig ScenarioConfig::paper_scale() { return ScenarioConfig{}; }

ScenarioConfig ScenarioConfig::desk_scale() {
  ScenarioConfig cfg;
  cfg.horizon = 10;
  cfg.horizons = 40;
  cfg.landmarks = 300;
  cfg.restarts = 16;
  return cfg;
}

void ScenarioConfig::validate() const {
  const auto fail = [](const std::string& msg) { throw Error(ErrorKind::kConfig, msg); };
  for (double v : {radius, omega, omega_r, p0, sigma, model_noise_floor, fov_h, fov_v, landmark_inner,
                   landmark_outer, landmark_height, budget_fraction, epsilon}) {
    if (!std::isfinite(v)) fail("non-finite parameter");
  }
  if (!(radius > 0.0)) fail("radius must be > 0");
  if (!(sigma > 0.0)) fail("sigma must be > 0");
  if (horizon < 1) fail("T must be >= 1");
  if (horizons < 1) fail("horizons must be >= 1");
  if (restarts < 1) fail("restarts must be >= 1");
  if (landmarks < 1) fail("landmarks must be >= 1");
  if (model_noise_floor < 0.0) fail("model_noise_floor must be >= 0");
  if (!(landmark_inner > 0.0 && landmark_outer > landmark_inner)) fail("landmark band must satisfy 0 < inner < outer");
  if (!(landmark_height >= 0.0)) fail("landmark_height must be >= 0");
  if (!(budget_fraction > 0.0 && budget_fraction <= 1.0)) fail("budget_fraction must lie in (0, 1]");
  if (!(epsilon > 0.0 && epsilon < 1.0)) fail("epsilon must lie in (0, 1)");
  const auto check_psd = [&](const Matrix3d& m, const char* name) {
    if (!m.allFinite() || (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 ||
        Eigen::SelfAdjointEigenSolver<Matrix3d>(m).eigenvalues()(0) < -1e-12) {
      fail(std::string(name) + " must be symmetric PSD");
    }
  };
  check_psd(process_noise, "process_noise");
  check_psd(initial_cov, "initial_cov");
  if (Eigen::SelfAdjointEigenSolver<Matrix3d>(initial_cov).eigenvalues()(0) <= 0.0) {
    fail("initial_cov must be positive definite");
  }
  try {
    rig().validate();
  } catch (const Error& e) {
    fail(e.what());
  }
}

CameraRig ScenarioConfig::rig() const {
  CameraRig r;
  r.sigma = sigma;
  r.fov_h = fov_h;
  r.fov_v = fov_v;
  return r;
}

DynamicsSpec ScenarioConfig::model_dynamics() const {
  return integrator_dynamics(process_noise + model_noise_floor * Matrix3d::Identity());
}

int ScenarioConfig::budget(int n_candidates) const {
  return static_cast<int>(std::ceil(budget_fraction * n_candidates - 1e-12));
}

Vector3d reference_path(const ScenarioConfig& cfg, double tau) {
  const double a = cfg.omega * tau;
  return {cfg.p0 + cfg.radius * std::cos(a), cfg.radius * std::sin(a), cfg.radius * std::sin(0.5 * a)};
}

Matrix3d orientation_schedule(const ScenarioConfig& cfg, double tau) {
  const double s = std::sin(cfg.omega_r * tau);
  return euler_zyx(2.0 * std::numbers::pi * s, -0.5 * std::numbers::pi + (std::numbers::pi / 20.0) * s, 0.0);
}

std::vector<Feature> generate_landmarks(const ScenarioConfig& cfg, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "landmarks"));
  const double r_in = cfg.landmark_inner * cfg.radius;
  const double r_out = cfg.landmark_outer * cfg.radius;
  const double h = cfg.landmark_height * cfg.radius;
  std::uniform_real_distribution<double> area(r_in * r_in, r_out * r_out);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> height(-h, h);
  std::vector<Feature> out;
  out.reserve(static_cast<std::size_t>(cfg.landmarks));
  for (int i = 0; i < cfg.landmarks; ++i) {
    const double r = std::sqrt(area(rng));
    const double a = angle(rng);
    const double z = height(rng);
    out.push_back({i, Vector3d(cfg.p0 + r * std::cos(a), r * std::sin(a), z)});
  }
  return out;
}

Vector3d tracking_controls(const ScenarioConfig& cfg, int tau, const Vector3d& mean) {
  return reference_path(cfg, tau + 1) - mean;
}

double rmse(std::span<const Vector3d> truth, std::span<const Vector3d> means) {
  if (truth.size() != means.size() || truth.empty()) {
    throw Error(ErrorKind::kDimensionMismatch, "rmse needs T+1 truth and mean samples");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) sum += (truth[k] - means[k]).squaredNorm();
  return std::sqrt(sum) / (3.0 * static_cast<double>(truth.size()));
}

double relative_gap(double theta, double theta_greedy) {
  if (!(theta_greedy > 0.0)) throw Error(ErrorKind::kUndefinedGap, "greedy RMSE must be > 0");
  return (theta - theta_greedy) / theta_greedy * 100.0;
}

double cpu_ratio(double time_method, double time_greedy) {
  if (!(time_method > 0.0) || !(time_greedy > 0.0)) {
    throw Error(ErrorKind::kInvalidInput, "CPU times must be > 0");
  }
  return time_method / time_greedy;
}

std::vector<CdfPoint> empirical_cdf(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::vector<CdfPoint> out;
  const double n = static_cast<double>(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    out.push_back({values[i], static_cast<double>(i + 1) / n});
  }
  return out;
}

BenchmarkResult run_benchmark(const ScenarioConfig& cfg, Exec exec,
                              const std::function<void(const MetricsRecord&)>& on_record) {
  cfg.validate();
  const auto landmarks = generate_landmarks(cfg, cfg.seed);
  HorizonOptions opts;
  opts.methods = {Method::kLeverage, Method::kUniform, Method::kGreedy};
  opts.exec = exec;

  BenchmarkResult out;
  HorizonStart start = initial_start(cfg);
  std::vector<double> kappas;
  std::vector<double> kappas_u;
  for (int h = 0; h < cfg.horizons; ++h) {
    start.index = h;
    const HorizonRecord rec = run_horizon(cfg, landmarks, start, opts);
    const auto& lev = rec.outcomes[0];
    const auto& uni = rec.outcomes[1];
    const auto& gre = rec.outcomes[2];

    MetricsRecord m;
    m.horizon = h;
    m.t = rec.t;
    m.n_candidates = rec.candidates.size();
    m.q = rec.q;
    m.measure_all = rec.measure_all;
    m.theta = lev.theta;
    m.theta_u = uni.theta;
    m.theta_g = gre.theta;
    m.phi = relative_gap(lev.theta, gre.theta);
    m.phi_u = relative_gap(uni.theta, gre.theta);
    // A clock tick can read zero for an empty candidate set; clamp to 1 ns.
    m.elapsed = std::max(lev.selection.elapsed, 1e-9);
    m.elapsed_u = std::max(uni.selection.elapsed, 1e-9);
    m.elapsed_g = std::max(gre.selection.elapsed, 1e-9);
    m.kappa = cpu_ratio(m.elapsed, m.elapsed_g);
    m.kappa_u = cpu_ratio(m.elapsed_u, m.elapsed_g);
    m.measure = lev.selection.measure;
    m.measure_u = uni.selection.measure;
    m.measure_g = gre.selection.measure;
    m.seed = derive_seed(cfg.seed, "selection", static_cast<std::uint64_t>(h));
    const double slack = 1e-9 * std::abs(m.measure_all);
    m.theta_bound_ok = m.measure >= m.measure_all - slack && m.measure_u >= m.measure_all - slack &&
                       m.measure_g >= m.measure_all - slack;
    for (double v : {m.theta, m.theta_u, m.theta_g, m.phi, m.phi_u, m.kappa, m.kappa_u, m.measure,
                     m.measure_u, m.measure_g, m.measure_all}) {
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::kPropagationAbort, "horizon " + std::to_string(h) + ": non-finite metric");
      }
    }
    kappas.push_back(m.kappa);
    kappas_u.push_back(m.kappa_u);
    if (on_record) on_record(m);
    out.records.push_back(m);
    start = rec.next;
  }
  out.kappa_cdf = empirical_cdf(kappas);
  out.kappa_u_cdf = empirical_cdf(kappas_u);
  out.realized_turns = cfg.omega * cfg.horizon * cfg.horizons / (2.0 * std::numbers::pi);
  return out;
}

}  // namespace fsel
