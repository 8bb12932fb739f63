#pragma once

#include <span>
#include <vector>

#include "fsel/motion.hpp"
#include "fsel/numerics.hpp"

namespace fsel {

struct CameraRig {
  Matrix3d r_c = Matrix3d::Identity();  // camera w.r.t. robot
  Vector3d x_c = Vector3d::Zero();      // camera translation w.r.t. robot
  double sigma = 0.1;                   // bearing noise std
  double fov_h = 0.785398163397448;     // horizontal half-angle, rad (45 deg)
  double fov_v = 0.610865238198015;     // vertical half-angle, rad (35 deg)

  /// Throws kInvalidInput unless r_c is in SO(3), sigma > 0 and fov in (0, pi/2].
  void validate() const;
};

struct Feature {
  int id = 0;
  Vector3d y = Vector3d::Zero();
};

/// Stacked linear observation z^f = F x + E y + eta for one feature over a horizon.
struct FeatureContribution {
  int id = 0;
  std::vector<bool> visible;  // per frame, T+1 entries
  int n_visible = 0;
  MatrixXd f;                 // (3 n_f) x 3(T+1)
  MatrixXd e;                 // (3 n_f) x 3
  SymMatrix hf;               // marginal information on the stacked state
  MatrixXd bf;                // 3(T+1) x (3 n_f)
  bool triangulable = false;
};

Matrix3d skew(const Vector3d& u);

/// R = Rz(alpha) Ry(beta) Rx(gamma).
Matrix3d euler_zyx(double alpha, double beta, double gamma);

/// Unit bearing in the camera frame from robot position x with orientation r to y.
/// Throws kDegenerateObservation if y coincides with the camera center.
Vector3d camera_bearing(const CameraRig& rig, const Vector3d& x, const Matrix3d& r, const Vector3d& y);

/// z = U (R R_c)^T (x - y) + eta with U = skew(u_meas).
Vector3d observe(const CameraRig& rig, const Vector3d& x, const Matrix3d& r, const Feature& f,
                 const Vector3d& u_meas, const Vector3d& eta);

/// Positive depth and inside both half-angles (closed).
bool visible(const CameraRig& rig, const Vector3d& x, const Matrix3d& r, const Feature& f);

/// Builds a contribution from per-visible-frame row blocks M_k = U_k (R_k R_c)^T.
/// `frames[i]` is the 0-based frame index of `rows[i]`; frames must be increasing.
FeatureContribution assemble_contribution(int id, int horizon, std::span<const int> frames,
                                          std::span<const Matrix3d> rows, double sigma);

/// Forward-simulates visibility along the planned means/orientations (T+1 each)
/// and linearizes the bearing model there.
FeatureContribution build_contribution(const CameraRig& rig, std::span<const Matrix3d> orientations,
                                       std::span<const Vector3d> means, const Feature& f);

/// Means per frame taken from a stacked belief mean.
std::vector<Vector3d> frame_means(const VectorXd& stacked);

}  // namespace fsel
