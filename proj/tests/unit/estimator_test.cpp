#include <gtest/gtest.h>

#include <algorithm>

#include "fsel/checks/oracles.hpp"
#include "fsel/estimator.hpp"

namespace fsel {
namespace {

struct Fixture {
  checks::RandomInstance inst;
  std::vector<const FeatureContribution*> selected;
  std::vector<VectorXd> z;
};

Fixture make(std::uint64_t seed, int features = 4, int horizon = 2) {
  Rng rng(seed);
  Fixture fx{checks::random_instance(rng, checks::InstanceOptions{features, horizon, 0.1, 2, 1.0}), {}, {}};
  for (const auto& f : fx.inst.set.contributions) {
    fx.selected.push_back(&f);
    fx.z.push_back(checks::random_matrix(rng, f.f.rows(), 1));
  }
  return fx;
}

double rel(const MatrixXd& a, const MatrixXd& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

TEST(Fuse, EmptySelectionReturnsPrior) {
  const auto fx = make(71);
  const auto post = fuse(fx.inst.set.prior, {}, {});
  EXPECT_LT(rel(post.belief.mean, fx.inst.prior.mean), 1e-10);
  EXPECT_LT(rel(post.belief.cov.mat(), fx.inst.prior.cov.mat()), 1e-10);
  EXPECT_TRUE(post.ids.empty());
}

TEST(Fuse, MatchesNormalEquationsOracle) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto fx = make(500 + seed, 5, 3);
    const auto post = fuse(fx.inst.set.prior, fx.selected, fx.z);
    const auto oracle = checks::normal_equations_posterior(fx.inst.prior, fx.selected, fx.z, fx.inst.sigma);
    EXPECT_LT(rel(post.belief.mean, oracle.mean), 1e-6) << "seed " << seed;
    EXPECT_LT(rel(post.belief.cov.mat(), oracle.cov), 1e-6) << "seed " << seed;
  }
}

TEST(Fuse, InformationIsAdditive) {
  const auto fx = make(72);
  const auto post = fuse(fx.inst.set.prior, fx.selected, fx.z);
  SymMatrix h = fx.inst.set.prior.h;
  RowVectorXd b = fx.inst.set.prior.b;
  for (std::size_t i = 0; i < fx.selected.size(); ++i) {
    h += fx.selected[i]->hf;
    b += (fx.selected[i]->bf * fx.z[i]).transpose();
  }
  EXPECT_LT(rel(post.info.h.mat(), h.mat()), 1e-12);
  EXPECT_LT(rel(post.info.b, b), 1e-12);
}

TEST(Fuse, HalvingNoiseVarianceDoublesFeatureInformation) {
  Rng rng(73);
  const auto fx = make(73);
  const auto& c = *fx.selected.front();
  std::vector<int> frames;
  std::vector<Matrix3d> rows;
  for (int k = 0, r = 0; k < static_cast<int>(c.visible.size()); ++k) {
    if (!c.visible[static_cast<std::size_t>(k)]) continue;
    frames.push_back(k);
    rows.push_back(c.f.block<3, 3>(3 * r++, 3 * k));
  }
  const int horizon = static_cast<int>(c.visible.size()) - 1;
  const auto a = assemble_contribution(0, horizon, frames, rows, 0.1);
  const auto b = assemble_contribution(0, horizon, frames, rows, 0.1 / std::sqrt(2.0));
  const FeatureContribution* pa[] = {&a};
  const FeatureContribution* pb[] = {&b};
  const std::vector<VectorXd> z{checks::random_matrix(rng, a.f.rows(), 1)};
  const auto& prior = fx.inst.set.prior;
  const MatrixXd da = fuse(prior, pa, z).info.h.mat() - prior.h.mat();
  const MatrixXd db = fuse(prior, pb, z).info.h.mat() - prior.h.mat();
  EXPECT_LT((db - 2.0 * da).norm(), 1e-9 * da.norm());
}

TEST(Fuse, OrderIndependent) {
  const auto fx = make(74, 8, 3);
  auto sel = fx.selected;
  auto z = fx.z;
  const auto forward = fuse(fx.inst.set.prior, sel, z);
  std::reverse(sel.begin(), sel.end());
  std::reverse(z.begin(), z.end());
  const auto backward = fuse(fx.inst.set.prior, sel, z);
  EXPECT_LE((forward.info.h.mat() - backward.info.h.mat()).norm(), 1e-12 * forward.info.h.mat().norm());
  EXPECT_LE((forward.info.b - backward.info.b).norm(), 1e-12 * forward.info.b.norm());
}

TEST(Fuse, MoreFeaturesNeverIncreaseMeasures) {
  const auto fx = make(75, 6, 2);
  for (Measure m : {Measure::kVariance, Measure::kEntropy, Measure::kSpectral}) {
    double prev = evaluate_measure(m, fx.inst.set.prior.h);
    for (std::size_t k = 1; k <= fx.selected.size(); ++k) {
      const std::span<const FeatureContribution* const> sel(fx.selected.data(), k);
      const std::span<const VectorXd> z(fx.z.data(), k);
      const double v = evaluate_measure(m, fuse(fx.inst.set.prior, sel, z).info.h);
      EXPECT_LE(v, prev + 1e-9 * std::max(1.0, std::abs(prev)));
      prev = v;
    }
  }
}

TEST(Fuse, ShapeErrors) {
  const auto fx = make(76);
  auto z = fx.z;
  z[0] = VectorXd::Zero(z[0].size() + 3);
  try {
    fuse(fx.inst.set.prior, fx.selected, z);
    FAIL() << "expected a fusion-shape error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kFusionShape);
  }
  EXPECT_THROW(fuse(fx.inst.set.prior, fx.selected, std::span<const VectorXd>(fx.z.data(), 1)), Error);
}

TEST(Fuse, RejectsNonTriangulable) {
  const auto fx = make(77);
  const auto single = assemble_contribution(0, 2, std::vector<int>{1}, std::vector<Matrix3d>{skew(Vector3d::UnitZ())}, 0.1);
  const FeatureContribution* sel[] = {&single};
  const std::vector<VectorXd> z{VectorXd::Zero(3)};
  EXPECT_THROW(fuse(fx.inst.set.prior, sel, z), Error);
}

ScenarioConfig noiseless_config() {
  ScenarioConfig cfg = ScenarioConfig::desk_scale();
  cfg.horizon = 5;
  cfg.landmarks = 200;
  cfg.restarts = 4;
  cfg.sigma = 1e-8;
  cfg.process_noise.setZero();
  cfg.model_noise_floor = 1e-6;
  cfg.sample_initial_truth = false;
  return cfg;
}

TEST(RunHorizon, NoiselessRecoveryForEveryMethod) {
  // Near-zero sigma with every candidate fused, then exact zero bearing noise
  // at the scenario sigma so that selection can factor H(Theta).
  for (bool all : {true, false}) {
    ScenarioConfig cfg = noiseless_config();
    if (!all) cfg.sigma = 0.1;
    const auto landmarks = generate_landmarks(cfg, cfg.seed);
    HorizonOptions opts;
    opts.select_all = all;
    opts.noiseless_observations = !all;
    HorizonStart start = initial_start(cfg);
    for (int h = 0; h < 2; ++h) {
      start.index = h;
      const auto rec = run_horizon(cfg, landmarks, start, opts);
      for (const auto& out : rec.outcomes) {
        const auto means = frame_means(out.posterior.belief.mean);
        ASSERT_EQ(means.size(), rec.truth.size());
        for (std::size_t k = 0; k < means.size(); ++k) {
          EXPECT_LT((means[k] - rec.truth[k]).norm(), 1e-4) << "horizon " << h << " frame " << k;
        }
      }
      start = rec.next;
    }
  }
}

TEST(RunHorizon, SelectionsRespectTheFullSetBound) {
  ScenarioConfig cfg = ScenarioConfig::desk_scale();
  cfg.restarts = 4;
  const auto landmarks = generate_landmarks(cfg, cfg.seed);
  HorizonStart start = initial_start(cfg);
  for (int h = 0; h < 3; ++h) {
    start.index = h;
    const auto rec = run_horizon(cfg, landmarks, start, HorizonOptions{});
    ASSERT_EQ(rec.outcomes.size(), 3u);
    EXPECT_GT(rec.candidates.size(), 0);
    for (const auto& out : rec.outcomes) {
      EXPECT_GE(out.selection.measure, rec.measure_all * (1.0 - 1e-9));
      EXPECT_TRUE(psd_check(out.posterior.belief.cov));
      EXPECT_LE(static_cast<int>(out.selection.indices.size()), rec.q);
    }
    EXPECT_EQ(rec.next.index, h + 1);
    start = rec.next;
  }
}

TEST(RunHorizon, TwentyStepHorizonGivesStateDimension63) {
  ScenarioConfig cfg = ScenarioConfig::paper_scale();
  cfg.restarts = 2;
  const auto landmarks = generate_landmarks(cfg, cfg.seed);
  HorizonOptions opts;
  opts.methods = {Method::kLeverage};
  const auto rec = run_horizon(cfg, landmarks, initial_start(cfg), opts);
  EXPECT_EQ(rec.prior.cov.dim(), 63);
  EXPECT_EQ(rec.truth.size(), 21u);
}

}  // namespace
}  // namespace fsel
