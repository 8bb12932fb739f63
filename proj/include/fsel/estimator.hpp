#pragma once

#include <span>
#include <vector>

#include "fsel/motion.hpp"
#include "fsel/selection.hpp"
#include "fsel/simenv.hpp"
#include "fsel/vision.hpp"

namespace fsel {

struct FusedPosterior {
  InformationState info;
  GaussianBelief belief;
  std::vector<int> ids;
};

/// Posterior moments mu + H^{-1} g for H = H-bar + data_h, where g is the
/// summed innovation. When the data block is blind to a common shift of every
/// frame (bearing-only features with unknown positions) the solve runs in
/// (x_t, x_k - x_t) coordinates, so the O(1) prior information along that
/// shift never meets the sigma^-2 data block in one factorization. Falls back
/// to a direct solve when the invariance does not hold.
GaussianBelief translation_invariant_posterior(const InformationState& prior, const VectorXd& prior_mean,
                                               const MatrixXd& data_h, const VectorXd& innovation);

/// B^f (z - F mu - E y_hat) with y_hat triangulated at mu; equals B^f z - H^f mu.
VectorXd feature_innovation(const FeatureContribution& c, const VectorXd& z, const VectorXd& mu);

/// H = H-bar + sum H^f, b = b-bar + sum (B^f z^f)^T, with compensated sums.
FusedPosterior fuse(const InformationState& prior, std::span<const FeatureContribution* const> selected,
                    std::span<const VectorXd> measurements);

/// Where a horizon starts: the estimator's 3x3 marginal and the true position.
struct HorizonStart {
  int index = 0;  // horizon number
  Vector3d mean = Vector3d::Zero();
  Matrix3d cov = Matrix3d::Identity();
  Vector3d truth = Vector3d::Zero();
};

struct MethodOutcome {
  SelectionResult selection;
  FusedPosterior posterior;
  double theta = 0.0;
};

struct HorizonRecord {
  int index = 0;
  int t = 0;
  GaussianBelief prior;
  std::vector<Vector3d> truth;  // T+1 true positions
  CandidateSet candidates;
  int q = 0;
  double measure_all = 0.0;
  std::vector<MethodOutcome> outcomes;  // one per requested method, same order
  HorizonStart next;                    // hand-off from the driver method
};

struct HorizonOptions {
  std::vector<Method> methods{Method::kLeverage, Method::kUniform, Method::kGreedy};
  /// Fuse every candidate instead of running selection (noiseless checks).
  bool select_all = false;
  /// Simulated bearings carry no noise; the model sigma is unchanged.
  bool noiseless_observations = false;
  Exec exec;
};

/// Propagate, enumerate candidates, select, simulate truth and bearings, fuse,
/// and hand the terminal marginal to the next horizon.
HorizonRecord run_horizon(const ScenarioConfig& cfg, std::span<const Feature> landmarks,
                          const HorizonStart& start, const HorizonOptions& opts);

HorizonStart initial_start(const ScenarioConfig& cfg);

}  // namespace fsel
