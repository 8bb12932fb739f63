#include "fsel/motion.hpp"

#include <string>

namespace fsel {

const char* to_string(CrossMode mode) {
  return mode == CrossMode::kStandard ? "standard" : "paper-literal";
}

DynamicsSpec integrator_dynamics(const Matrix3d& process_noise) {
  DynamicsSpec spec;
  spec.g = [](const Vector3d& x, const Vector3d& u) -> Vector3d { return x + u; };
  spec.h = [](const Vector3d& u_ref, const Vector3d& mu) -> Vector3d { return u_ref - mu; };
  spec.jacobian = [](const Vector3d&, const Vector3d&, const Vector3d&) -> Matrix3d {
    return Matrix3d::Identity();
  };
  spec.mode = JacobianMode::kAnalytic;
  spec.process_noise = [process_noise](int) { return process_noise; };
  return spec;
}

Matrix3d finite_difference_jacobian(const DynamicsSpec& spec, const Vector3d& x,
                                    const Vector3d& mu, const Vector3d& u_ref) {
  const Vector3d u = spec.h(u_ref, mu);
  Matrix3d jac;
  for (int i = 0; i < 3; ++i) {
    const double step = 1e-6 * (1.0 + std::abs(x(i)));
    Vector3d xp = x;
    Vector3d xm = x;
    xp(i) += step;
    xm(i) -= step;
    jac.col(i) = (spec.g(xp, u) - spec.g(xm, u)) / (2.0 * step);
  }
  return jac;
}

Linearization linearize(const DynamicsSpec& spec, const Vector3d& mean_prev, const Vector3d& u_ref) {
  if (!spec.g || !spec.h) {
    throw Error(ErrorKind::kInvalidInput, "dynamics spec needs g and h");
  }
  Linearization lin;
  lin.delta = spec.g(mean_prev, spec.h(u_ref, mean_prev));
  if (spec.mode == JacobianMode::kAnalytic) {
    if (!spec.jacobian) throw Error(ErrorKind::kInvalidInput, "analytic mode needs a jacobian");
    lin.a = spec.jacobian(mean_prev, mean_prev, u_ref);
  } else {
    lin.a = finite_difference_jacobian(spec, mean_prev, mean_prev, u_ref);
  }
  if (!lin.a.allFinite() || !lin.delta.allFinite()) {
    throw Error(ErrorKind::kLinearizationFailure, "non-finite Jacobian or predicted mean");
  }
  return lin;
}

namespace {

// A_k for absolute step k; identity outside [t+1, t+T] where the plan defines none.
Matrix3d plan_a(const HorizonPlan& plan, int k) {
  const int idx = k - plan.t - 1;
  if (idx < 0 || idx >= plan.horizon) return Matrix3d::Identity();
  return plan.a[static_cast<std::size_t>(idx)];
}

}  // namespace

std::pair<GaussianBelief, HorizonPlan> propagate_prior(const DynamicsSpec& spec,
                                                       const Vector3d& init_mean,
                                                       const Matrix3d& init_cov,
                                                       const std::vector<Vector3d>& u_ref, int t,
                                                       CrossMode mode) {
  const int horizon = static_cast<int>(u_ref.size());
  if (horizon < 1) throw Error(ErrorKind::kInvalidInput, "horizon length must be >= 1");
  {
    Eigen::LLT<Matrix3d> llt(0.5 * (init_cov + init_cov.transpose()));
    if (!init_cov.allFinite() || llt.info() != Eigen::Success) {
      throw Error(ErrorKind::kNotPositiveDefinite, "initial covariance");
    }
  }
  if (!spec.process_noise) throw Error(ErrorKind::kInvalidInput, "dynamics spec needs process noise");

  HorizonPlan plan;
  plan.t = t;
  plan.horizon = horizon;
  plan.u_ref = u_ref;

  const Eigen::Index n = 3 * (horizon + 1);
  std::vector<Matrix3d> diag(static_cast<std::size_t>(horizon + 1));
  VectorXd mean(n);
  diag[0] = 0.5 * (init_cov + init_cov.transpose());
  mean.segment<3>(0) = init_mean;

  Vector3d prev = init_mean;
  for (int k = 1; k <= horizon; ++k) {
    const auto lin = linearize(spec, prev, u_ref[static_cast<std::size_t>(k - 1)]);
    const Matrix3d lambda = spec.process_noise(t + k);
    plan.delta.push_back(lin.delta);
    plan.a.push_back(lin.a);
    diag[static_cast<std::size_t>(k)] =
        lin.a * diag[static_cast<std::size_t>(k - 1)] * lin.a.transpose() + lambda;
    mean.segment<3>(3 * k) = lin.delta;
    prev = lin.delta;
  }

  MatrixXd cov = MatrixXd::Zero(n, n);
  for (int i = 0; i <= horizon; ++i) {
    cov.block<3, 3>(3 * i, 3 * i) = diag[static_cast<std::size_t>(i)];
    Matrix3d chain = Matrix3d::Identity();  // A_j ... A_{i+1}
    for (int j = i + 1; j <= horizon; ++j) {
      Matrix3d cross;
      if (mode == CrossMode::kStandard) {
        chain = plan.a[static_cast<std::size_t>(j - 1)] * chain;
        cross = diag[static_cast<std::size_t>(i)] * chain.transpose();
      } else {
        // Printed form: (prod_{m=1}^{j-i} A_{j-m-1} - I) Sigma_i, absolute indices.
        Matrix3d prod = Matrix3d::Identity();
        for (int m = 1; m <= j - i; ++m) prod = prod * plan_a(plan, t + j - m - 1);
        cross = (prod - Matrix3d::Identity()) * diag[static_cast<std::size_t>(i)];
      }
      cov.block<3, 3>(3 * i, 3 * j) = cross;
      cov.block<3, 3>(3 * j, 3 * i) = cross.transpose();
    }
  }

  if (!cov.allFinite()) {
    throw Error(ErrorKind::kCrossCovarianceInconsistency,
                std::string("non-finite covariance in ") + to_string(mode) + " mode");
  }
  auto sym = SymMatrix::symmetrize(cov);
  // PSD suffices here (Lambda = 0 gives a singular but valid stack); callers
  // that need the information form get kNotPositiveDefinite from to_information.
  if (!psd_check(sym)) {
    throw Error(ErrorKind::kCrossCovarianceInconsistency,
                std::string("assembled covariance is not positive semidefinite in ") +
                    to_string(mode) + " mode");
  }
  return {GaussianBelief{std::move(mean), std::move(sym)}, std::move(plan)};
}

InformationState to_information(const GaussianBelief& belief) {
  if (belief.mean.size() != belief.cov.dim()) {
    throw Error(ErrorKind::kDimensionMismatch, "belief mean/covariance");
  }
  Eigen::LLT<MatrixXd> llt(belief.cov.mat());
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::kNotPositiveDefinite, "covariance is singular or indefinite");
  }
  const Eigen::Index n = belief.cov.dim();
  InformationState info;
  info.h = SymMatrix::symmetrize(llt.solve(MatrixXd::Identity(n, n)));
  info.b = llt.solve(belief.mean).transpose();
  return info;
}

GaussianBelief from_information(const InformationState& info) {
  if (info.b.size() != info.h.dim()) {
    throw Error(ErrorKind::kDimensionMismatch, "information vector/matrix");
  }
  Eigen::LLT<MatrixXd> llt(info.h.mat());
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::kNotPositiveDefinite, "information matrix is not positive definite");
  }
  const Eigen::Index n = info.h.dim();
  GaussianBelief belief;
  belief.cov = SymMatrix::symmetrize(llt.solve(MatrixXd::Identity(n, n)));
  belief.mean = llt.solve(info.b.transpose());
  return belief;
}

}  // namespace fsel
