#include "fsel/estimator.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "fsel/kernels.hpp"

namespace fsel {

GaussianBelief translation_invariant_posterior(const InformationState& prior, const VectorXd& prior_mean,
                                               const MatrixXd& data_h, const VectorXd& innovation) {
  const Eigen::Index n = prior.h.dim();
  const Eigen::Index frames = n / 3;
  const auto direct = [&] {
    const SymMatrix h = SymMatrix::symmetrize(prior.h.mat() + data_h);
    const Eigen::LLT<MatrixXd> llt(h.mat());
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorKind::kNotPositiveDefinite, "posterior information is not positive definite");
    }
    return GaussianBelief{prior_mean + llt.solve(innovation), inverse_pd(h)};
  };
  if (frames < 2 || data_h.cwiseAbs().maxCoeff() == 0.0) return direct();

  // Data information along a common shift of every frame.
  MatrixXd shift_rows = MatrixXd::Zero(3, n);
  for (Eigen::Index k = 0; k < frames; ++k) shift_rows += data_h.middleRows(3 * k, 3);
  const double scale = data_h.cwiseAbs().maxCoeff() * static_cast<double>(n);
  if (shift_rows.cwiseAbs().maxCoeff() > 1e-9 * scale) return direct();

  // x = S w, w = (x_t, d_1, ..., d_T), x_k = x_t + d_k.
  MatrixXd s = MatrixXd::Identity(n, n);
  for (Eigen::Index k = 1; k < frames; ++k) s.block<3, 3>(3 * k, 0) = Matrix3d::Identity();
  MatrixXd h_w = s.transpose() * prior.h.mat() * s;
  // The data enter only the displacement block; their x_t rows vanish.
  h_w.bottomRightCorner(n - 3, n - 3) += data_h.bottomRightCorner(n - 3, n - 3);
  h_w = 0.5 * (h_w + h_w.transpose());
  VectorXd g_w = VectorXd::Zero(n);
  g_w.tail(n - 3) = innovation.tail(n - 3);

  const Eigen::LLT<MatrixXd> llt(h_w);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::kNotPositiveDefinite, "posterior information is not positive definite");
  }
  GaussianBelief out;
  out.mean = prior_mean + s * llt.solve(g_w);
  out.cov = SymMatrix::symmetrize(s * llt.solve(MatrixXd::Identity(n, n)) * s.transpose());
  return out;
}

VectorXd feature_innovation(const FeatureContribution& c, const VectorXd& z, const VectorXd& mu) {
  // Triangulate relative to the first visible frame from the planned bearings,
  // then form z - F mu - E y_hat block by block so the large terms cancel in
  // 3-vectors before B^f (of order sigma^-2) is applied. B^f E = 0, so this
  // equals B^f z - H^f mu in exact arithmetic.
  std::vector<int> frames;
  for (std::size_t k = 0; k < c.visible.size(); ++k) {
    if (c.visible[k]) frames.push_back(static_cast<int>(k));
  }
  const Vector3d ref = mu.segment<3>(3 * frames.front());
  Matrix3d a = Matrix3d::Zero();
  Vector3d rhs = Vector3d::Zero();
  for (std::size_t j = 0; j < frames.size(); ++j) {
    const Matrix3d m = c.f.block<3, 3>(3 * static_cast<Eigen::Index>(j), 3 * frames[j]);
    const Matrix3d mtm = m.transpose() * m;
    a += mtm;
    rhs += mtm * (mu.segment<3>(3 * frames[j]) - ref);
  }
  const Vector3d y_local = a.ldlt().solve(rhs);
  VectorXd r(z.size());
  for (std::size_t j = 0; j < frames.size(); ++j) {
    const auto row = 3 * static_cast<Eigen::Index>(j);
    const Matrix3d m = c.f.block<3, 3>(row, 3 * frames[j]);
    r.segment<3>(row) = z.segment<3>(row) - m * ((mu.segment<3>(3 * frames[j]) - ref) - y_local);
  }
  return c.bf * r;
}

FusedPosterior fuse(const InformationState& prior, std::span<const FeatureContribution* const> selected,
                    std::span<const VectorXd> measurements) {
  if (selected.size() != measurements.size()) {
    throw Error(ErrorKind::kFusionShape, "one measurement vector per selected feature");
  }
  const Eigen::Index n = prior.h.dim();
  const Eigen::LLT<MatrixXd> prior_llt(prior.h.mat());
  if (prior_llt.info() != Eigen::Success) {
    throw Error(ErrorKind::kNotPositiveDefinite, "prior information is not positive definite");
  }
  const VectorXd prior_mean = prior_llt.solve(prior.b.transpose());

  MatrixAccumulator h_acc(n);
  MatrixAccumulator b_acc(MatrixXd::Zero(n, 1));
  MatrixAccumulator g_acc(MatrixXd::Zero(n, 1));
  FusedPosterior out;
  for (std::size_t k = 0; k < selected.size(); ++k) {
    const auto& c = *selected[k];
    const auto& z = measurements[k];
    if (c.hf.dim() != n || c.bf.rows() != n || c.bf.cols() != z.size()) {
      throw Error(ErrorKind::kFusionShape, "feature " + std::to_string(c.id) + ": B^f is " +
                                               std::to_string(c.bf.rows()) + "x" + std::to_string(c.bf.cols()) +
                                               ", z has " + std::to_string(z.size()) + " rows");
    }
    if (!c.triangulable) {
      throw Error(ErrorKind::kInvalidInput, "feature " + std::to_string(c.id) + " is not triangulable");
    }
    h_acc.add(c.hf.mat());
    b_acc.add(c.bf * z);
    g_acc.add(feature_innovation(c, z, prior_mean));
    out.ids.push_back(c.id);
  }
  std::sort(out.ids.begin(), out.ids.end());
  const MatrixXd data_h = h_acc.result();
  out.info.h = SymMatrix::symmetrize(prior.h.mat() + data_h);
  out.info.b = prior.b + b_acc.result().col(0).transpose();
  out.belief = translation_invariant_posterior(prior, prior_mean, data_h, g_acc.result().col(0));
  return out;
}

HorizonStart initial_start(const ScenarioConfig& cfg) {
  HorizonStart s;
  s.index = 0;
  s.mean = reference_path(cfg, 0.0);
  s.cov = cfg.initial_cov;
  s.truth = s.mean;
  if (cfg.sample_initial_truth) {
    Rng rng(derive_seed(cfg.seed, "initial-truth"));
    std::normal_distribution<double> normal;
    const Vector3d w(normal(rng), normal(rng), normal(rng));
    s.truth += Eigen::SelfAdjointEigenSolver<Matrix3d>(cfg.initial_cov).operatorSqrt() * w;
  }
  return s;
}

namespace {

// Stacked bearing residuals z^f for one feature over its visible frames,
// linearized at the planned bearings, evaluated at the true positions.
VectorXd simulate_measurement(const ScenarioConfig& cfg, const CameraRig& rig, const Feature& f,
                              const FeatureContribution& c, std::span<const Vector3d> means,
                              std::span<const Matrix3d> orientations, std::span<const Vector3d> truth,
                              int horizon_index, double noise_scale) {
  Rng rng(derive_seed(cfg.seed, "observation",
                      (static_cast<std::uint64_t>(horizon_index) << 32) ^ static_cast<std::uint32_t>(f.id)));
  std::normal_distribution<double> normal(0.0, rig.sigma);
  VectorXd z(3 * c.n_visible);
  int row = 0;
  for (std::size_t k = 0; k < c.visible.size(); ++k) {
    if (!c.visible[k]) continue;
    const Vector3d u = camera_bearing(rig, means[k], orientations[k], f.y);
    const Vector3d eta = noise_scale * Vector3d(normal(rng), normal(rng), normal(rng));
    z.segment<3>(3 * row) = observe(rig, truth[k], orientations[k], f, u, eta);
    ++row;
  }
  return z;
}

}  // namespace

HorizonRecord run_horizon(const ScenarioConfig& cfg, std::span<const Feature> landmarks,
                          const HorizonStart& start, const HorizonOptions& opts) {
  const int horizon = cfg.horizon;
  const int t = start.index * horizon;
  HorizonRecord rec;
  rec.index = start.index;
  rec.t = t;

  // (1) prior over x_{t..t+T}
  std::vector<Vector3d> u_ref;
  for (int k = 1; k <= horizon; ++k) u_ref.push_back(reference_path(cfg, t + k));
  try {
    auto [belief, plan] =
        propagate_prior(cfg.model_dynamics(), start.mean, start.cov, u_ref, t, cfg.cross_mode);
    rec.prior = std::move(belief);
  } catch (const Error& e) {
    throw Error(ErrorKind::kPropagationAbort,
                "horizon " + std::to_string(start.index) + ": " + e.what());
  }
  const InformationState prior_info = to_information(rec.prior);

  // (2) candidates from forward simulation of the plan
  const CameraRig rig = cfg.rig();
  std::vector<Matrix3d> orientations;
  for (int k = 0; k <= horizon; ++k) orientations.push_back(orientation_schedule(cfg, t + k));
  const auto means = frame_means(rec.prior.mean);
  auto all = kernels::build_contributions(rig, orientations, means, landmarks, opts.exec);
  rec.candidates = make_candidate_set(prior_info, std::move(all));
  const CandidateSet& cands = rec.candidates;
  rec.q = opts.select_all ? cands.size() : cfg.budget(cands.size());

  // (4) truth: open-loop plan controls plus process noise, shared by all methods
  {
    Rng rng(derive_seed(cfg.seed, "truth", static_cast<std::uint64_t>(start.index)));
    std::normal_distribution<double> normal;
    const Matrix3d root = Eigen::SelfAdjointEigenSolver<Matrix3d>(cfg.process_noise).operatorSqrt();
    const bool noisy = cfg.process_noise.cwiseAbs().maxCoeff() > 0.0;
    rec.truth.push_back(start.truth);
    for (int k = 1; k <= horizon; ++k) {
      const Vector3d u = tracking_controls(cfg, t + k - 1, means[static_cast<std::size_t>(k - 1)]);
      Vector3d x = rec.truth.back() + u;
      const Vector3d w(normal(rng), normal(rng), normal(rng));
      if (noisy) x += root * w;
      rec.truth.push_back(x);
    }
  }

  const auto feature_of = [&](int id) -> const Feature& {
    const auto it = std::find_if(landmarks.begin(), landmarks.end(), [id](const Feature& f) { return f.id == id; });
    return *it;
  };

  // (3) + (5) selection and fusion per method
  // With every candidate fused the measure comes from the posterior covariance,
  // which stays accurate when H(Theta) itself is too ill-conditioned to factor.
  if (!opts.select_all) rec.measure_all = evaluate_measure(cfg.measure, maximal_information(cands));
  const auto fuse_indices = [&](const std::vector<int>& indices) {
    std::vector<const FeatureContribution*> chosen;
    std::vector<VectorXd> zs;
    for (int i : indices) {
      const auto& c = cands.contributions[static_cast<std::size_t>(i)];
      chosen.push_back(&c);
      zs.push_back(simulate_measurement(cfg, rig, feature_of(c.id), c, means, orientations, rec.truth,
                                        start.index, opts.noiseless_observations ? 0.0 : 1.0));
    }
    return fuse(prior_info, chosen, zs);
  };

  const std::uint64_t sel_seed = derive_seed(cfg.seed, "selection", static_cast<std::uint64_t>(start.index));
  if (opts.select_all) {
    MethodOutcome out;
    out.selection.method = Method::kGreedy;
    out.selection.indices.resize(static_cast<std::size_t>(cands.size()));
    std::iota(out.selection.indices.begin(), out.selection.indices.end(), 0);
    out.selection.h = maximal_information(cands);
    for (const auto& c : cands.contributions) out.selection.ids.push_back(c.id);
    std::sort(out.selection.ids.begin(), out.selection.ids.end());
    rec.outcomes.push_back(std::move(out));
  } else {
    for (Method m : opts.methods) {
      MethodOutcome out;
      out.selection = run_method(m, cands, rec.q, cfg.measure, cfg.restarts, sel_seed, opts.exec);
      rec.outcomes.push_back(std::move(out));
    }
  }
  for (auto& out : rec.outcomes) {
    out.posterior = fuse_indices(out.selection.indices);
    out.theta = rmse(rec.truth, frame_means(out.posterior.belief.mean));
  }
  if (opts.select_all) {
    const MatrixXd& cov = rec.outcomes[0].posterior.belief.cov.mat();
    const Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov);
    switch (cfg.measure) {
      case Measure::kVariance: rec.measure_all = cov.trace(); break;
      case Measure::kEntropy: rec.measure_all = es.eigenvalues().array().log().sum(); break;
      case Measure::kSpectral: rec.measure_all = es.eigenvalues().maxCoeff(); break;
    }
    rec.outcomes[0].selection.measure = rec.measure_all;
  }

  // (6) terminal marginal of the driver's posterior
  std::size_t driver = 0;
  for (std::size_t i = 0; i < opts.methods.size() && !opts.select_all; ++i) {
    if (opts.methods[i] == cfg.driver) driver = i;
  }
  const auto& post = rec.outcomes[driver].posterior.belief;
  rec.next.index = start.index + 1;
  rec.next.mean = post.block_mean(horizon);
  rec.next.cov = post.block_cov(horizon);
  rec.next.truth = rec.truth.back();
  return rec;
}

}  // namespace fsel
