#pragma once

// Reference computations that avoid the library's production paths: full
// eigendecompositions instead of Cholesky, explicit enumeration instead of
// search, joint least squares instead of Schur-complement updates.

#include <cstdint>
#include <functional>
#include <vector>

#include "fsel/motion.hpp"
#include "fsel/selection.hpp"
#include "fsel/vision.hpp"

namespace fsel::checks {

MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols);
/// Symmetric positive definite with eigenvalues in [lo, hi].
MatrixXd random_spd(Rng& rng, Eigen::Index n, double lo = 0.5, double hi = 5.0);
Matrix3d random_rotation(Rng& rng);
MatrixXd random_orthogonal(Rng& rng, Eigen::Index n);
Vector3d random_unit(Rng& rng);

/// rho_v, rho_e, rho_lambda from the full spectrum.
double measure_from_spectrum(Measure m, const MatrixXd& h);

/// Cross product by components.
Vector3d cross_components(const Vector3d& u, const Vector3d& v);

/// H^f by marginalizing the joint (state, feature) Fisher information with a
/// unit regularizer on the state block: inv(inv(J + diag(I, 0))_xx) - I.
MatrixXd marginal_information_oracle(const MatrixXd& f, const MatrixXd& e, double sigma);

/// Posterior over x from the joint normal equations of the prior as a
/// pseudo-measurement plus every stacked feature row (feature positions as
/// nuisance unknowns).
struct BatchPosterior {
  VectorXd mean;
  MatrixXd cov;
};
BatchPosterior normal_equations_posterior(const GaussianBelief& prior,
                                          const std::vector<const FeatureContribution*>& features,
                                          const std::vector<VectorXd>& z, double sigma);

/// Empirical covariance of x_{0..T} under x_k = A_k x_{k-1} + w_k.
MatrixXd monte_carlo_covariance(const std::vector<Matrix3d>& a, const Matrix3d& lambda, const Matrix3d& sigma0,
                                long rollouts, std::uint64_t seed);

/// Central differences of an arbitrary map R^3 -> R^3.
Matrix3d central_difference(const std::function<Vector3d(const Vector3d&)>& fn, const Vector3d& x, double step);

/// Smallest grid value gamma with sum w (gamma - w) h h^T PSD (full eigensolve).
double chi_grid_oracle(std::span<const WeightedTerm> terms, int grid_points);

struct BruteForce {
  std::vector<int> indices;
  double value = 0.0;
  long subsets = 0;
};
/// Exhaustive minimum of rho(H-bar + sum H^f) over all subsets of size exactly q.
BruteForce brute_force_best(const CandidateSet& c, int q, Measure m);

struct InstanceOptions {
  int features = 10;
  int horizon = 2;
  double sigma = 0.1;
  int min_frames = 2;
  double process_noise = 1.0;
};

struct RandomInstance {
  CandidateSet set;
  GaussianBelief prior;
  double sigma = 0.1;
};

/// Prior from a random linear model through propagate_prior; features with
/// random bearings/orientations in a random subset of frames.
RandomInstance random_instance(Rng& rng, const InstanceOptions& opts);

}  // namespace fsel::checks
