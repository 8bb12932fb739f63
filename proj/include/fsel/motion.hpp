#pragma once

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "fsel/numerics.hpp"

namespace fsel {

enum class JacobianMode { kAnalytic, kFiniteDifference };

/// x_{tau+1} = g(x_tau, h(u_ref, mu_tau)) + delta_tau,  delta_tau ~ N(0, Lambda_tau).
struct DynamicsSpec {
  std::function<Vector3d(const Vector3d& x, const Vector3d& u)> g;
  std::function<Vector3d(const Vector3d& u_ref, const Vector3d& mu)> h;
  /// d/dx g(x, h(u_ref, mu)) with mu held fixed; required in analytic mode.
  std::function<Matrix3d(const Vector3d& x, const Vector3d& mu, const Vector3d& u_ref)> jacobian;
  JacobianMode mode = JacobianMode::kFiniteDifference;
  /// Lambda_tau for step index tau (absolute time).
  std::function<Matrix3d(int tau)> process_noise;
};

/// g(x,u) = x + u with the tracking law h(u_ref, mu) = u_ref - mu; u_ref is the
/// next reference position. Analytic Jacobian (identity).
DynamicsSpec integrator_dynamics(const Matrix3d& process_noise);

enum class CrossMode { kStandard, kPaperLiteral };

const char* to_string(CrossMode mode);

struct Linearization {
  Vector3d delta;  // predicted mean g(mu, h(u_ref, mu))
  Matrix3d a;      // state Jacobian
};

struct HorizonPlan {
  int t = 0;
  int horizon = 0;                 // T
  std::vector<Vector3d> u_ref;     // tau = t+1 .. t+T
  std::vector<Vector3d> delta;     // linearization points, same indexing
  std::vector<Matrix3d> a;         // A_tau, same indexing

  Eigen::Index state_dim() const { return 3 * (horizon + 1); }
};

struct GaussianBelief {
  VectorXd mean;
  SymMatrix cov;

  /// Mean/covariance of the 3-vector at frame k (0-based within the horizon).
  Vector3d block_mean(int k) const { return mean.segment<3>(3 * k); }
  Matrix3d block_cov(int k) const { return cov.mat().block<3, 3>(3 * k, 3 * k); }
};

struct InformationState {
  RowVectorXd b;  // mu^T Sigma^{-1}
  SymMatrix h;
};

Linearization linearize(const DynamicsSpec& spec, const Vector3d& mean_prev, const Vector3d& u_ref);

/// Central-difference Jacobian of x -> g(x, h(u_ref, mu)) with step 1e-6 (1 + |x_i|).
Matrix3d finite_difference_jacobian(const DynamicsSpec& spec, const Vector3d& x,
                                    const Vector3d& mu, const Vector3d& u_ref);

/// Stacked prior over x_{t..t+T}. u_ref.size() is the horizon length T.
/// Throws kCrossCovarianceInconsistency if the assembled covariance is not PSD.
std::pair<GaussianBelief, HorizonPlan> propagate_prior(const DynamicsSpec& spec,
                                                       const Vector3d& init_mean,
                                                       const Matrix3d& init_cov,
                                                       const std::vector<Vector3d>& u_ref, int t,
                                                       CrossMode mode = CrossMode::kStandard);

InformationState to_information(const GaussianBelief& belief);
GaussianBelief from_information(const InformationState& info);

}  // namespace fsel
