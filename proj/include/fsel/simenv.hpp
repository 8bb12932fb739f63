#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "fsel/motion.hpp"
#include "fsel/selection.hpp"
#include "fsel/vision.hpp"

namespace fsel {

/// Closed-loop navigation scenario around a figure-eight reference path.
struct ScenarioConfig {
  double radius = 7500.0;      // R
  double omega = 0.08;         // path rate, rad/step
  double omega_r = 0.0064;     // rotation schedule rate, rad/step
  double p0 = 0.0;             // path center offset along the first axis
  double sigma = 0.1;          // bearing noise
  Matrix3d process_noise = Vector3d(4.0, 4.0, 16.0).asDiagonal();
  Matrix3d initial_cov = Matrix3d::Identity();
  /// Added to process_noise in the estimator's motion model only (never to the
  /// simulated truth); keeps the horizon prior invertible when process_noise is 0.
  double model_noise_floor = 0.0;
  int horizon = 20;            // T
  int horizons = 400;
  int restarts = 50;           // p
  int landmarks = 1752;
  std::uint64_t seed = 1;
  double fov_h = 0.785398163397448;
  double fov_v = 0.610865238198015;
  double landmark_inner = 1.2;  // radial band, multiples of R
  double landmark_outer = 2.5;
  double landmark_height = 1.0;  // |z| <= landmark_height * R
  double budget_fraction = 0.5;  // q = ceil(fraction * N_t)
  Measure measure = Measure::kVariance;
  CrossMode cross_mode = CrossMode::kStandard;
  bool sample_initial_truth = true;  // truth x_0 ~ N(mu_0, Sigma_0), else x_0 = mu_0
  Method driver = Method::kLeverage;  // whose posterior seeds the next horizon
  double epsilon = 0.5;

  static ScenarioConfig paper_scale();
  static ScenarioConfig desk_scale();

  /// Throws kConfig on out-of-range values.
  void validate() const;
  CameraRig rig() const;
  DynamicsSpec model_dynamics() const;
  int budget(int n_candidates) const;
};

Vector3d reference_path(const ScenarioConfig& cfg, double tau);
Matrix3d orientation_schedule(const ScenarioConfig& cfg, double tau);
std::vector<Feature> generate_landmarks(const ScenarioConfig& cfg, std::uint64_t seed);
/// u_tau = p^ref_{tau+1} - mu_tau.
Vector3d tracking_controls(const ScenarioConfig& cfg, int tau, const Vector3d& mean);

/// (1 / (3(T+1))) * sqrt(sum_k ||x_k - mu_k||^2); normalization outside the root.
double rmse(std::span<const Vector3d> truth, std::span<const Vector3d> means);
double relative_gap(double theta, double theta_greedy);
double cpu_ratio(double time_method, double time_greedy);

struct MetricsRecord {
  int horizon = 0;
  int t = 0;
  int n_candidates = 0;
  int q = 0;
  double measure_all = 0.0;  // rho(H(Theta))
  double theta = 0.0, theta_u = 0.0, theta_g = 0.0;
  double phi = 0.0, phi_u = 0.0;
  double kappa = 0.0, kappa_u = 0.0;
  double measure = 0.0, measure_u = 0.0, measure_g = 0.0;
  double elapsed = 0.0, elapsed_u = 0.0, elapsed_g = 0.0;
  std::uint64_t seed = 0;  // per-horizon selection seed
  bool theta_bound_ok = true;  // rho(H(Phi)) >= rho(H(Theta)) for all methods
};

struct CdfPoint {
  double value = 0.0;
  double fraction = 0.0;
};

std::vector<CdfPoint> empirical_cdf(std::vector<double> values);

struct BenchmarkResult {
  std::vector<MetricsRecord> records;
  std::vector<CdfPoint> kappa_cdf;
  std::vector<CdfPoint> kappa_u_cdf;
  double realized_turns = 0.0;
};

/// Runs every horizon with all three methods on identical candidates and truth.
BenchmarkResult run_benchmark(const ScenarioConfig& cfg, Exec exec = {},
                              const std::function<void(const MetricsRecord&)>& on_record = {});

}  // namespace fsel
