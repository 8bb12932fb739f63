#include "fsel/vision.hpp"

#include <cmath>
#include <numbers>

namespace fsel {

void CameraRig::validate() const {
  if (!r_c.allFinite() || (r_c.transpose() * r_c - Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-10 ||
      std::abs(r_c.determinant() - 1.0) > 1e-10) {
    throw Error(ErrorKind::kInvalidInput, "camera rotation is not in SO(3)");
  }
  if (!x_c.allFinite()) throw Error(ErrorKind::kInvalidInput, "camera translation");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw Error(ErrorKind::kInvalidInput, "sigma must be > 0");
  const double half_pi = 0.5 * std::numbers::pi;
  if (!(fov_h > 0.0 && fov_h <= half_pi) || !(fov_v > 0.0 && fov_v <= half_pi)) {
    throw Error(ErrorKind::kInvalidInput, "field-of-view half-angles must lie in (0, pi/2]");
  }
}

Matrix3d skew(const Vector3d& u) {
  Matrix3d m;
  m << 0.0, -u.z(), u.y(),
       u.z(), 0.0, -u.x(),
       -u.y(), u.x(), 0.0;
  return m;
}

Matrix3d euler_zyx(double alpha, double beta, double gamma) {
  return (Eigen::AngleAxisd(alpha, Vector3d::UnitZ()) * Eigen::AngleAxisd(beta, Vector3d::UnitY()) *
          Eigen::AngleAxisd(gamma, Vector3d::UnitX()))
      .toRotationMatrix();
}

namespace {

Vector3d camera_direction(const CameraRig& rig, const Vector3d& x, const Matrix3d& r, const Vector3d& y) {
  return (r * rig.r_c).transpose() * (y - (x + r * rig.x_c));
}

}  // namespace

Vector3d camera_bearing(const CameraRig& rig, const Vector3d& x, const Matrix3d& r, const Vector3d& y) {
  const Vector3d d = camera_direction(rig, x, r, y);
  const double norm = d.norm();
  if (!(norm >= 1e-9)) {
    throw Error(ErrorKind::kDegenerateObservation, "feature coincides with the camera center");
  }
  return d / norm;
}

Vector3d observe(const CameraRig& rig, const Vector3d& x, const Matrix3d& r, const Feature& f,
                 const Vector3d& u_meas, const Vector3d& eta) {
  if ((f.y - (x + r * rig.x_c)).norm() < 1e-9) {
    throw Error(ErrorKind::kDegenerateObservation, "feature coincides with the camera center");
  }
  return skew(u_meas) * (r * rig.r_c).transpose() * (x - f.y) + eta;
}

bool visible(const CameraRig& rig, const Vector3d& x, const Matrix3d& r, const Feature& f) {
  const Vector3d d = camera_direction(rig, x, r, f.y);
  if (!(d.z() > 0.0)) return false;
  // Closed boundary; the slack absorbs rounding of tan() at the exact half-angle.
  const double slack = 1.0 + 1e-12;
  return std::abs(d.x()) <= std::tan(rig.fov_h) * d.z() * slack &&
         std::abs(d.y()) <= std::tan(rig.fov_v) * d.z() * slack;
}

FeatureContribution assemble_contribution(int id, int horizon, std::span<const int> frames,
                                          std::span<const Matrix3d> rows, double sigma) {
  if (frames.size() != rows.size()) throw Error(ErrorKind::kDimensionMismatch, "frames/rows");
  if (!(sigma > 0.0)) throw Error(ErrorKind::kInvalidInput, "sigma must be > 0");
  const Eigen::Index n = 3 * (horizon + 1);
  const auto nf = static_cast<Eigen::Index>(frames.size());

  FeatureContribution c;
  c.id = id;
  c.visible.assign(static_cast<std::size_t>(horizon + 1), false);
  c.n_visible = static_cast<int>(nf);
  c.f = MatrixXd::Zero(3 * nf, n);
  c.e = MatrixXd::Zero(3 * nf, 3);
  for (Eigen::Index k = 0; k < nf; ++k) {
    const int frame = frames[static_cast<std::size_t>(k)];
    if (frame < 0 || frame > horizon) throw Error(ErrorKind::kInvalidInput, "frame index out of horizon");
    if (k > 0 && frame <= frames[static_cast<std::size_t>(k - 1)]) {
      throw Error(ErrorKind::kInvalidInput, "frame indices must be increasing");
    }
    c.visible[static_cast<std::size_t>(frame)] = true;
    c.f.block<3, 3>(3 * k, 3 * frame) = rows[static_cast<std::size_t>(k)];
    c.e.block<3, 3>(3 * k, 0) = -rows[static_cast<std::size_t>(k)];
  }
  c.hf = SymMatrix::zero(n);
  c.bf = MatrixXd::Zero(n, 3 * nf);
  if (nf == 0) return c;

  const Matrix3d ete = c.e.transpose() * c.e;
  Eigen::SelfAdjointEigenSolver<Matrix3d> es(ete, Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues()(0);
  const double lmax = es.eigenvalues()(2);
  c.triangulable = lmax > 0.0 && lmin > 0.0 && lmax / lmin < 1e12;
  if (!c.triangulable) return c;

  const double w = 1.0 / (sigma * sigma);
  // C = F^T E (E^T E)^{-1}
  const MatrixXd fte = c.f.transpose() * c.e;
  const MatrixXd cmat = ete.ldlt().solve(fte.transpose()).transpose();
  c.bf = w * (c.f.transpose() - cmat * c.e.transpose());
  c.hf = SymMatrix::symmetrize(w * (c.f.transpose() * c.f - cmat * fte.transpose()));
  return c;
}

FeatureContribution build_contribution(const CameraRig& rig, std::span<const Matrix3d> orientations,
                                       std::span<const Vector3d> means, const Feature& f) {
  if (orientations.size() != means.size() || means.empty()) {
    throw Error(ErrorKind::kDimensionMismatch, "need T+1 orientations and means");
  }
  const int horizon = static_cast<int>(means.size()) - 1;
  std::vector<int> frames;
  std::vector<Matrix3d> rows;
  for (int k = 0; k <= horizon; ++k) {
    const auto& x = means[static_cast<std::size_t>(k)];
    const auto& r = orientations[static_cast<std::size_t>(k)];
    if (!visible(rig, x, r, f)) continue;
    const Vector3d u = camera_bearing(rig, x, r, f.y);
    frames.push_back(k);
    rows.push_back(skew(u) * (r * rig.r_c).transpose());
  }
  return assemble_contribution(f.id, horizon, frames, rows, rig.sigma);
}

std::vector<Vector3d> frame_means(const VectorXd& stacked) {
  std::vector<Vector3d> out;
  out.reserve(static_cast<std::size_t>(stacked.size() / 3));
  for (Eigen::Index k = 0; k + 2 < stacked.size(); k += 3) out.emplace_back(stacked.segment<3>(k));
  return out;
}

}  // namespace fsel
