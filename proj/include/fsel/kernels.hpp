#pragma once

// Data-parallel inner loops. Each kernel has a serial reference and an OpenMP
// version with identical results (reductions are ordered by (value, index)).

#include <cstdint>
#include <span>
#include <vector>

#include "fsel/selection.hpp"
#include "fsel/vision.hpp"

namespace fsel::kernels {

/// Best candidate of one greedy round: minimal (value, id).
struct Pick {
  int index = -1;
  double value = 0.0;
};

/// Outcome of one sampler restart, used for the (measure, restart) reduction.
struct RestartOutcome {
  std::vector<int> indices;
  SymMatrix h;
  double measure = 0.0;
};

namespace serial {

std::vector<FeatureContribution> build_contributions(const CameraRig& rig,
                                                     std::span<const Matrix3d> orientations,
                                                     std::span<const Vector3d> means,
                                                     std::span<const Feature> features);

/// r_f = <H(Theta)^{-1}, H-bar^f>_F for every candidate.
VectorXd score_traces(const CandidateSet& c, const SymMatrix& h_theta_inv);

Pick greedy_scan(const CandidateSet& c, const SymMatrix& h, std::span<const char> taken, Measure m);

/// Runs restarts [0, p) and returns the index of the minimal-measure outcome.
int best_restart(const CandidateSet& c, const VectorXd& pi, int q, Measure m, int restarts,
                 std::uint64_t seed, std::vector<RestartOutcome>& outcomes);

}  // namespace serial

namespace omp {

std::vector<FeatureContribution> build_contributions(const CameraRig& rig,
                                                     std::span<const Matrix3d> orientations,
                                                     std::span<const Vector3d> means,
                                                     std::span<const Feature> features, int workers);

VectorXd score_traces(const CandidateSet& c, const SymMatrix& h_theta_inv, int workers);

Pick greedy_scan(const CandidateSet& c, const SymMatrix& h, std::span<const char> taken, Measure m,
                 int workers);

int best_restart(const CandidateSet& c, const VectorXd& pi, int q, Measure m, int restarts,
                 std::uint64_t seed, std::vector<RestartOutcome>& outcomes, int workers);

}  // namespace omp

/// Single sampler restart (shared by both variants).
RestartOutcome sample_once(const CandidateSet& c, const VectorXd& pi, int q, Measure m, std::uint64_t seed);

/// Dispatch on exec.workers.
std::vector<FeatureContribution> build_contributions(const CameraRig& rig,
                                                     std::span<const Matrix3d> orientations,
                                                     std::span<const Vector3d> means,
                                                     std::span<const Feature> features, Exec exec);

}  // namespace fsel::kernels
