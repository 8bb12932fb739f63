#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fsel/checks/oracles.hpp"
#include "fsel/vision.hpp"

namespace fsel {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(Skew, ZeroAndBasis) {
  EXPECT_TRUE(skew(Vector3d::Zero()).isZero(0.0));
  EXPECT_TRUE((skew(Vector3d::UnitZ()) * Vector3d::UnitX()).isApprox(Vector3d::UnitY()));
}

TEST(Skew, MatchesComponentCrossProduct) {
  Rng rng(31);
  for (int i = 0; i < 100; ++i) {
    const Vector3d u = checks::random_matrix(rng, 3, 1), v = checks::random_matrix(rng, 3, 1);
    EXPECT_LT((skew(u) * v - checks::cross_components(u, v)).norm(), 1e-14);
  }
}

TEST(EulerZyx, IdentityAndYaw) {
  EXPECT_TRUE(euler_zyx(0, 0, 0).isIdentity(1e-15));
  EXPECT_LT((euler_zyx(kPi / 2, 0, 0) * Vector3d::UnitX() - Vector3d::UnitY()).norm(), 1e-15);
}

TEST(EulerZyx, AlwaysOrthogonal) {
  Rng rng(32);
  std::uniform_real_distribution<double> ang(-4.0, 4.0);
  for (int i = 0; i < 100; ++i) {
    const Matrix3d r = euler_zyx(ang(rng), ang(rng), ang(rng));
    EXPECT_LT((r.transpose() * r - Matrix3d::Identity()).norm(), 1e-12);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
  }
}

TEST(Observe, AlignedBearingGivesZero) {
  CameraRig rig;
  const Feature f{0, Vector3d::UnitX()};
  EXPECT_TRUE(observe(rig, Vector3d::Zero(), Matrix3d::Identity(), f, Vector3d::UnitX(), Vector3d::Zero())
                  .isZero(1e-15));

  Rng rng(33);
  rig.r_c = checks::random_rotation(rng);
  rig.x_c = Vector3d(0.1, -0.2, 0.3);
  const Matrix3d r = checks::random_rotation(rng);
  const Vector3d x(1.0, 2.0, 3.0);
  const Feature g{1, Vector3d(-4.0, 5.0, 2.0)};
  const Vector3d u = camera_bearing(rig, x, r, g.y);
  // x_c shifts the optical center, so the residual uses the camera position.
  const Vector3d z = skew(u) * (r * rig.r_c).transpose() * ((x + r * rig.x_c) - g.y);
  EXPECT_LT(z.norm(), 1e-12);
}

TEST(Observe, FormulaMatchesOracle) {
  Rng rng(34);
  CameraRig rig;
  rig.r_c = checks::random_rotation(rng);
  for (int i = 0; i < 50; ++i) {
    const Matrix3d r = checks::random_rotation(rng);
    const Vector3d x = checks::random_matrix(rng, 3, 1);
    const Feature f{i, Vector3d(checks::random_matrix(rng, 3, 1)) + Vector3d(5, 5, 5)};
    const Vector3d u = checks::random_unit(rng), eta = checks::random_matrix(rng, 3, 1);
    const Vector3d expected = checks::cross_components(u, (r * rig.r_c).transpose() * (x - f.y)) + eta;
    EXPECT_LT((observe(rig, x, r, f, u, eta) - expected).norm(), 1e-12);
  }
}

TEST(Observe, DegenerateFeatureThrows) {
  CameraRig rig;
  const Feature f{0, Vector3d(1, 1, 1)};
  EXPECT_THROW(observe(rig, Vector3d(1, 1, 1), Matrix3d::Identity(), f, Vector3d::UnitZ(), Vector3d::Zero()),
               Error);
  EXPECT_THROW(camera_bearing(rig, Vector3d(1, 1, 1), Matrix3d::Identity(), f.y), Error);
}

TEST(Visible, AxisBehindAndBoundary) {
  CameraRig rig;
  const Matrix3d r = Matrix3d::Identity();
  EXPECT_TRUE(visible(rig, Vector3d::Zero(), r, Feature{0, Vector3d(0, 0, 5)}));
  EXPECT_FALSE(visible(rig, Vector3d::Zero(), r, Feature{0, Vector3d(0, 0, -5)}));
  const double edge = std::tan(rig.fov_h) * 5.0;
  EXPECT_TRUE(visible(rig, Vector3d::Zero(), r, Feature{0, Vector3d(edge, 0, 5)}));
  EXPECT_FALSE(visible(rig, Vector3d::Zero(), r, Feature{0, Vector3d(edge * 1.001, 0, 5)}));
  const double vedge = std::tan(rig.fov_v) * 5.0;
  EXPECT_TRUE(visible(rig, Vector3d::Zero(), r, Feature{0, Vector3d(0, -vedge, 5)}));
  EXPECT_FALSE(visible(rig, Vector3d::Zero(), r, Feature{0, Vector3d(0, -vedge * 1.001, 5)}));
}

TEST(CameraRig, Validate) {
  CameraRig rig;
  EXPECT_NO_THROW(rig.validate());
  rig.sigma = 0.0;
  EXPECT_THROW(rig.validate(), Error);
  rig = CameraRig{};
  rig.r_c = 2.0 * Matrix3d::Identity();
  EXPECT_THROW(rig.validate(), Error);
  rig = CameraRig{};
  rig.fov_h = 2.0;
  EXPECT_THROW(rig.validate(), Error);
}

Matrix3d random_row(Rng& rng) { return skew(checks::random_unit(rng)) * checks::random_rotation(rng).transpose(); }

TEST(Contribution, NoFramesIsZeroAndNotTriangulable) {
  const auto c = assemble_contribution(7, 2, {}, {}, 0.1);
  EXPECT_FALSE(c.triangulable);
  EXPECT_EQ(c.n_visible, 0);
  EXPECT_TRUE(c.hf.mat().isZero(0.0));
  EXPECT_EQ(c.hf.dim(), 9);
}

TEST(Contribution, SingleFrameIsNotTriangulable) {
  Rng rng(35);
  const std::vector<int> frames{1};
  const std::vector<Matrix3d> rows{random_row(rng)};
  const auto c = assemble_contribution(0, 2, frames, rows, 0.1);
  EXPECT_FALSE(c.triangulable);
  Eigen::FullPivLU<Matrix3d> lu(c.e.transpose() * c.e);
  EXPECT_LE(lu.rank(), 2);
  EXPECT_TRUE(c.hf.mat().isZero(0.0));
}

TEST(Contribution, TwoFramesMatchSchurOracle) {
  Rng rng(36);
  for (int trial = 0; trial < 20; ++trial) {
    const std::vector<int> frames{0, 2};
    const std::vector<Matrix3d> rows{random_row(rng), random_row(rng)};
    const auto c = assemble_contribution(trial, 3, frames, rows, 0.1);
    ASSERT_TRUE(c.triangulable);
    const MatrixXd oracle = checks::marginal_information_oracle(c.f, c.e, 0.1);
    EXPECT_LT((c.hf.mat() - oracle).cwiseAbs().maxCoeff(), 1e-8 * (1.0 + oracle.cwiseAbs().maxCoeff()));
    EXPECT_TRUE(psd_check(c.hf));
  }
}

TEST(Contribution, SigmaScaling) {
  Rng rng(37);
  const std::vector<int> frames{0, 1, 2};
  const std::vector<Matrix3d> rows{random_row(rng), random_row(rng), random_row(rng)};
  const auto a = assemble_contribution(0, 2, frames, rows, 0.1);
  const auto b = assemble_contribution(0, 2, frames, rows, 0.2);
  const VectorXd z = checks::random_matrix(rng, 9, 1);
  EXPECT_LT((b.hf.mat() - 0.25 * a.hf.mat()).norm(), 1e-12 * a.hf.mat().norm());
  // B^f carries the same 1/sigma^2 factor as H^f.
  EXPECT_LT((b.bf * z - 0.25 * (a.bf * z)).norm(), 1e-12 * (a.bf * z).norm());
}

TEST(Contribution, AddingFrameIsLoewnerMonotone) {
  Rng rng(38);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Matrix3d> rows{random_row(rng), random_row(rng), random_row(rng)};
    const std::vector<int> two{0, 3}, three{0, 2, 3};
    const std::vector<Matrix3d> rows_two{rows[0], rows[2]};
    const auto small = assemble_contribution(0, 3, two, rows_two, 0.1);
    const auto large = assemble_contribution(0, 3, three, rows, 0.1);
    ASSERT_TRUE(small.triangulable);
    EXPECT_TRUE(loewner_geq(large.hf, small.hf, 1e-8 * large.hf.trace()));
  }
}

TEST(Contribution, NoiselessMeasurementsAreExplainedByTruth) {
  // B^f z with z = F x + E y equals H^f x: the feature position drops out.
  Rng rng(39);
  const std::vector<int> frames{0, 1};
  const std::vector<Matrix3d> rows{random_row(rng), random_row(rng)};
  const auto c = assemble_contribution(0, 1, frames, rows, 0.1);
  const VectorXd x = checks::random_matrix(rng, 6, 1);
  const Vector3d y = checks::random_matrix(rng, 3, 1);
  const VectorXd z = c.f * x + c.e * y;
  EXPECT_LT((c.bf * z - c.hf.mat() * x).norm(), 1e-9 * (c.hf.mat() * x).norm());
}

TEST(Contribution, RejectsBadFrames) {
  const std::vector<Matrix3d> rows{Matrix3d::Identity(), Matrix3d::Identity()};
  const std::vector<int> unordered{1, 0}, outside{0, 5};
  EXPECT_THROW(assemble_contribution(0, 2, unordered, rows, 0.1), Error);
  EXPECT_THROW(assemble_contribution(0, 2, outside, rows, 0.1), Error);
}

TEST(BuildContribution, ForwardSimulatedVisibility) {
  CameraRig rig;
  const std::vector<Matrix3d> orient(3, Matrix3d::Identity());
  const std::vector<Vector3d> means{Vector3d(0, 0, 0), Vector3d(1, 0, 0), Vector3d(0, 0, 20)};
  const auto c = build_contribution(rig, orient, means, Feature{4, Vector3d(0, 0, 10)});
  EXPECT_EQ(c.id, 4);
  EXPECT_EQ(c.n_visible, 2);
  EXPECT_TRUE(c.visible[0] && c.visible[1] && !c.visible[2]);
  EXPECT_TRUE(c.triangulable);
  EXPECT_TRUE(psd_check(c.hf));
}

}  // namespace
}  // namespace fsel
