#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "fsel/checks/oracles.hpp"
#include "fsel/kernels.hpp"
#include "fsel/selection.hpp"

namespace fsel {
namespace {

CandidateSet manual_set(const MatrixXd& prior, const std::vector<MatrixXd>& hfs) {
  CandidateSet c;
  c.prior = InformationState{RowVectorXd::Zero(prior.rows()), SymMatrix(prior)};
  for (std::size_t i = 0; i < hfs.size(); ++i) {
    FeatureContribution f;
    f.id = static_cast<int>(i);
    f.hf = SymMatrix(hfs[i]);
    f.triangulable = true;
    c.contributions.push_back(f);
  }
  return c;
}

checks::RandomInstance instance(std::uint64_t seed, int features = 10, int horizon = 2) {
  Rng rng(seed);
  return checks::random_instance(rng, checks::InstanceOptions{features, horizon, 0.1, 2, 1.0});
}

TEST(MaximalInformation, EmptyAndSingle) {
  const auto empty = manual_set(MatrixXd::Identity(3, 3), {});
  EXPECT_TRUE(maximal_information(empty).mat().isIdentity(0.0));
  const auto one = manual_set(MatrixXd::Identity(3, 3), {MatrixXd::Identity(3, 3)});
  EXPECT_TRUE(maximal_information(one).mat().isApprox(2.0 * MatrixXd::Identity(3, 3)));
}

TEST(MaximalInformation, EverySubsetIsSandwiched) {
  const auto inst = instance(41, 5);
  const auto& c = inst.set;
  const SymMatrix full = maximal_information(c);
  for (int mask = 0; mask < (1 << c.size()); ++mask) {
    SymMatrix h = c.prior.h;
    for (int i = 0; i < c.size(); ++i) {
      if (mask & (1 << i)) h += c.contributions[static_cast<std::size_t>(i)].hf;
    }
    EXPECT_TRUE(loewner_geq(h, c.prior.h));
    EXPECT_TRUE(loewner_geq(full, h));
  }
}

TEST(LeverageScores, SingleFeatureTakesAllMass) {
  Rng rng(42);
  const MatrixXd prior = checks::random_spd(rng, 6);
  const MatrixXd g = checks::random_matrix(rng, 3, 6);
  const auto c = manual_set(prior, {g.transpose() * g});
  const auto s = leverage_scores(c);
  EXPECT_NEAR(s.r(0), 6.0, 1e-10);
  EXPECT_NEAR(s.pi(0), 1.0, 1e-12);
}

TEST(LeverageScores, IdenticalFeaturesSplitEvenly) {
  Rng rng(43);
  const MatrixXd g = checks::random_matrix(rng, 3, 6);
  const auto c = manual_set(checks::random_spd(rng, 6), {g.transpose() * g, g.transpose() * g});
  const auto s = leverage_scores(c);
  EXPECT_NEAR(s.pi(0), 0.5, 1e-12);
  EXPECT_NEAR(s.pi(1), 0.5, 1e-12);
}

TEST(LeverageScores, SolveThenTraceOracleAndNormalization) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto c = instance(100 + seed, 3).set;
    const auto s = leverage_scores(c);
    const MatrixXd inv = maximal_information(c).mat().inverse();
    for (int f = 0; f < c.size(); ++f) {
      const MatrixXd aug = c.prior.h.mat() / c.size() + c.contributions[static_cast<std::size_t>(f)].hf.mat();
      const double oracle = (inv * aug).trace();
      EXPECT_NEAR(s.r(f), oracle, 1e-10 * std::max(1.0, oracle));
    }
    EXPECT_NEAR(s.pi.sum(), 1.0, 1e-10);
    EXPECT_TRUE((s.pi.array() >= 0.0).all());
  }
}

TEST(SampleSubset, ZeroBudgetKeepsPrior) {
  const auto c = instance(44).set;
  const auto r = sample_subset(c, leverage_scores(c), 0, 1);
  EXPECT_TRUE(r.ids.empty());
  EXPECT_TRUE(r.h.mat().isApprox(c.prior.h.mat(), 0.0));
}

TEST(SampleSubset, DegenerateDistribution) {
  const auto c = instance(45).set;
  ScoreTable s;
  s.n = c.dim();
  s.pi = VectorXd::Zero(c.size());
  s.pi(3) = 1.0;
  s.r = s.pi * static_cast<double>(s.n);
  for (int q : {1, 4, 9}) {
    const auto r = sample_subset(c, s, q, 7);
    ASSERT_EQ(r.indices.size(), 1u);
    EXPECT_EQ(r.indices[0], 3);
  }
}

void expect_frequencies(const std::vector<long>& counts, const VectorXd& pi, long draws) {
  for (Eigen::Index f = 0; f < pi.size(); ++f) {
    const double se = std::sqrt(draws * pi(f) * (1.0 - pi(f)));
    EXPECT_LE(std::abs(counts[static_cast<std::size_t>(f)] - draws * pi(f)), 3.0 * se + 1e-9) << "feature " << f;
  }
}

TEST(SampleSubset, DrawFrequenciesMatchScores) {
  const auto c = instance(46, 5).set;
  const auto s = leverage_scores(c);
  const long draws = 100000;
  std::vector<long> counts(static_cast<std::size_t>(c.size()), 0);
  for (long k = 0; k < draws; ++k) {
    const auto r = sample_subset(c, s, 1, derive_seed(46, "freq", static_cast<std::uint64_t>(k)));
    ++counts[static_cast<std::size_t>(r.indices.at(0))];
  }
  expect_frequencies(counts, s.pi, draws);
}

TEST(SampleSubset, BudgetBoundsSelectionSize) {
  const auto c = instance(47, 12).set;
  const auto s = leverage_scores(c);
  for (int q = 0; q <= 20; ++q) {
    const auto r = sample_subset(c, s, q, static_cast<std::uint64_t>(q));
    EXPECT_LE(static_cast<int>(r.indices.size()), std::min(q, c.size()));
    EXPECT_TRUE(std::is_sorted(r.indices.begin(), r.indices.end()));
  }
}

TEST(Analysis, SingleDrawWeightIsInverseProbability) {
  const auto c = instance(48).set;
  const auto s = leverage_scores(c);
  const auto refined = refined_scores(c);
  const auto a = sample_subset_analysis(c, s, refined, 1, 3);
  ASSERT_EQ(a.weights.size(), 1u);
  const auto [key, w] = *a.weights.begin();
  const double pi_fi = refined.pi[static_cast<std::size_t>(key.first)][static_cast<std::size_t>(key.second)];
  EXPECT_NEAR(w, 1.0 / pi_fi, 1e-12 / pi_fi);
}

TEST(Analysis, RefinedScoresSumToCoarse) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto c = instance(200 + seed).set;
    const auto s = leverage_scores(c);
    const auto refined = refined_scores(c);
    for (int f = 0; f < c.size(); ++f) {
      double sum = 0.0;
      for (double p : refined.pi[static_cast<std::size_t>(f)]) {
        EXPECT_GE(p, 0.0);
        sum += p;
      }
      EXPECT_NEAR(sum, s.pi(f), 1e-10);
      EXPECT_NEAR(refined.pi_feature[static_cast<std::size_t>(f)], s.pi(f), 1e-10);
    }
  }
}

TEST(Analysis, SameSelectionAsPlainSampler) {
  const auto c = instance(49).set;
  const auto s = leverage_scores(c);
  const auto refined = refined_scores(c);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto plain = sample_subset(c, s, 6, seed);
    const auto a = sample_subset_analysis(c, s, refined, 6, seed);
    EXPECT_EQ(plain.indices, a.selection.indices);
    EXPECT_TRUE(plain.h.mat().isApprox(a.selection.h.mat(), 1e-14));
    EXPECT_GT(a.chi, 0.0);
  }
}

TEST(Greedy, BudgetExtremes) {
  const auto c = instance(50).set;
  EXPECT_TRUE(greedy_select(c, 0, Measure::kVariance).indices.empty());
  const auto all = greedy_select(c, c.size(), Measure::kVariance);
  EXPECT_EQ(static_cast<int>(all.indices.size()), c.size());
  EXPECT_LT((all.h.mat() - maximal_information(c).mat()).norm(), 1e-9 * all.h.mat().norm());
}

TEST(Greedy, NeverBeatsBruteForce) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto c = instance(300 + seed, 8).set;
    for (Measure m : {Measure::kVariance, Measure::kEntropy, Measure::kSpectral}) {
      const auto g = greedy_select(c, 3, m);
      const auto bf = checks::brute_force_best(c, 3, m);
      EXPECT_EQ(bf.subsets, 56);
      EXPECT_GE(g.measure, bf.value - 1e-12 * std::abs(bf.value));
    }
  }
}

TEST(Greedy, TiesGoToLowestId) {
  const MatrixXd hf = MatrixXd::Identity(3, 3);
  const auto c = manual_set(MatrixXd::Identity(3, 3), {hf, hf, hf});
  const auto r = greedy_select(c, 1, Measure::kVariance);
  ASSERT_EQ(r.ids.size(), 1u);
  EXPECT_EQ(r.ids[0], 0);
}

TEST(Uniform, ExtremesAndFrequencies) {
  const auto c = instance(51, 4).set;
  EXPECT_TRUE(uniform_select(c, 0, 1).indices.empty());
  const auto single = instance(52, 1).set;
  ASSERT_EQ(single.size(), 1);
  EXPECT_EQ(uniform_select(single, 3, 1).indices, std::vector<int>{0});

  const long draws = 100000;
  std::vector<long> counts(4, 0);
  for (long k = 0; k < draws; ++k) {
    ++counts[static_cast<std::size_t>(uniform_select(c, 1, static_cast<std::uint64_t>(k)).indices.at(0))];
  }
  expect_frequencies(counts, VectorXd::Constant(4, 0.25), draws);
}

TEST(Measures, Examples) {
  const auto i4 = SymMatrix::identity(4);
  EXPECT_NEAR(evaluate_measure(Measure::kVariance, i4), 4.0, 1e-14);
  EXPECT_NEAR(evaluate_measure(Measure::kEntropy, i4), 0.0, 1e-14);
  EXPECT_NEAR(evaluate_measure(Measure::kSpectral, 2.0 * i4), 0.5, 1e-14);
  EXPECT_NEAR(evaluate_measure(Measure::kEntropy, 2.0 * SymMatrix::identity(2)), -2.0 * std::log(2.0), 1e-14);
  EXPECT_THROW(evaluate_measure(Measure::kVariance, SymMatrix::zero(2)), Error);
}

TEST(Measures, MatchSpectrumMonotoneAndInvariant) {
  Rng rng(53);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd b = checks::random_spd(rng, 7);
    const MatrixXd g = checks::random_matrix(rng, 7, 3);
    const MatrixXd a = b + g * g.transpose();
    const MatrixXd q = checks::random_orthogonal(rng, 7);
    for (Measure m : {Measure::kVariance, Measure::kEntropy, Measure::kSpectral}) {
      const double v = evaluate_measure(m, SymMatrix(b));
      const double oracle = checks::measure_from_spectrum(m, b);
      EXPECT_NEAR(v, oracle, 1e-8 * std::max(1.0, std::abs(oracle)));
      EXPECT_LE(evaluate_measure(m, SymMatrix::symmetrize(a)), v + 1e-12);
      const double rotated = evaluate_measure(m, SymMatrix::symmetrize(q.transpose() * b * q));
      EXPECT_NEAR(rotated, v, 1e-8 * std::max(1.0, std::abs(v)));
    }
  }
}

TEST(Measures, ParseRoundTrip) {
  for (Measure m : {Measure::kVariance, Measure::kEntropy, Measure::kSpectral}) {
    EXPECT_EQ(parse_measure(to_string(m)), m);
  }
  for (Method m : {Method::kLeverage, Method::kUniform, Method::kGreedy}) EXPECT_EQ(parse_method(to_string(m)), m);
  EXPECT_THROW(parse_measure("rho_x"), Error);
}

TEST(Restarts, SingleRestartEqualsSampler) {
  const auto c = instance(54).set;
  const auto best = best_of_restarts(c, 5, Measure::kVariance, 1, 77);
  const auto one = sample_subset(c, leverage_scores(c), 5, derive_seed(77, "restart", 0));
  EXPECT_EQ(best.indices, one.indices);
  EXPECT_DOUBLE_EQ(best.measure, one.measure);
}

TEST(Restarts, BestIsMinimumOfRuns) {
  const auto c = instance(55, 15).set;
  const auto s = leverage_scores(c);
  const auto best = best_of_restarts(c, 5, Measure::kEntropy, 12, 9);
  for (int k = 0; k < 12; ++k) {
    const auto run = sample_subset(c, s, 5, derive_seed(9, "restart", static_cast<std::uint64_t>(k)), Measure::kEntropy);
    EXPECT_LE(best.measure, run.measure);
  }
}

TEST(Restarts, EveryMethodIsSandwiched) {
  const auto c = instance(56, 20, 4).set;
  const SymMatrix full = maximal_information(c);
  for (Method m : {Method::kLeverage, Method::kUniform, Method::kGreedy}) {
    const auto r = run_method(m, c, 8, Measure::kVariance, 5, 3);
    EXPECT_TRUE(loewner_geq(r.h, c.prior.h));
    EXPECT_TRUE(loewner_geq(full, r.h));
    EXPECT_GE(r.measure, evaluate_measure(Measure::kVariance, full) * (1.0 - 1e-12));
  }
}

TEST(Determinism, SameSeedSameResult) {
  const auto c = instance(57, 20).set;
  const auto a = best_of_restarts(c, 7, Measure::kVariance, 8, 123);
  const auto b = best_of_restarts(c, 7, Measure::kVariance, 8, 123);
  EXPECT_EQ(a.indices, b.indices);
  EXPECT_EQ(a.measure, b.measure);
  EXPECT_EQ(a.restart, b.restart);
  EXPECT_NE(derive_seed(1, "a"), derive_seed(1, "b"));
  EXPECT_NE(derive_seed(1, "a", 0), derive_seed(1, "a", 1));
}

TEST(Certify, FullSetPassesEveryBound) {
  const auto c = instance(58).set;
  const double eps = 0.5;
  const auto cert = certify_bounds(c, maximal_information(c), eps, (1.0 - eps) / 4.0);
  EXPECT_NEAR(cert.factor, 1.0, 1e-12);
  EXPECT_TRUE(cert.loewner);
  EXPECT_TRUE(cert.measures_pass());
  EXPECT_NEAR(cert.loss_v, 0.0, 1e-12);
  EXPECT_NEAR(cert.loss_e, 0.0, 1e-12);
  EXPECT_NEAR(cert.loss_lambda, 0.0, 1e-12);
}

TEST(Certify, LoewnerPassImpliesMeasureBounds) {
  const auto c = instance(59, 30, 1).set;
  const auto report = certify(c, 20, 0.5, 60, 5);
  EXPECT_TRUE(report.implication_holds);
  for (const auto& run : report.runs) {
    if (run.loewner) {
      EXPECT_TRUE(run.measures_pass());
    }
    EXPECT_TRUE(run.literal_v && run.literal_e && run.literal_lambda);
  }
  EXPECT_EQ(report.chi.size(), 60u);
  EXPECT_GT(report.chi_bar, 0.0);
}

TEST(Kernels, SerialAndParallelAgree) {
  const auto inst = instance(60, 40, 3);
  const auto& c = inst.set;
  const SymMatrix inv = inverse_pd(maximal_information(c));
  const VectorXd a = kernels::serial::score_traces(c, inv);
  const VectorXd b = kernels::omp::score_traces(c, inv, 4);
  EXPECT_EQ(a, b);

  std::vector<char> taken(static_cast<std::size_t>(c.size()), 0);
  taken[2] = 1;
  for (Measure m : {Measure::kVariance, Measure::kEntropy, Measure::kSpectral}) {
    const auto ps = kernels::serial::greedy_scan(c, c.prior.h, taken, m);
    const auto po = kernels::omp::greedy_scan(c, c.prior.h, taken, m, 4);
    EXPECT_EQ(ps.index, po.index);
    EXPECT_EQ(ps.value, po.value);
  }

  const auto s = leverage_scores(c);
  std::vector<kernels::RestartOutcome> os, oo;
  const int bs = kernels::serial::best_restart(c, s.pi, 10, Measure::kVariance, 9, 4, os);
  const int bo = kernels::omp::best_restart(c, s.pi, 10, Measure::kVariance, 9, 4, oo, 4);
  EXPECT_EQ(bs, bo);
  ASSERT_EQ(os.size(), oo.size());
  for (std::size_t k = 0; k < os.size(); ++k) {
    EXPECT_EQ(os[k].indices, oo[k].indices);
    EXPECT_EQ(os[k].measure, oo[k].measure);
  }
  EXPECT_EQ(greedy_select(c, 6, Measure::kVariance, Exec{1}).indices,
            greedy_select(c, 6, Measure::kVariance, Exec{4}).indices);
}

TEST(Kernels, ContributionBuildersAgree) {
  Rng rng(61);
  CameraRig rig;
  std::vector<Matrix3d> orient;
  std::vector<Vector3d> means;
  for (int k = 0; k < 4; ++k) {
    orient.push_back(euler_zyx(0.05 * k, 0.0, 0.0));
    means.push_back(Vector3d(0.3 * k, 0.0, 0.0));
  }
  std::vector<Feature> features;
  std::uniform_real_distribution<double> u(-6.0, 6.0), depth(4.0, 20.0);
  for (int i = 0; i < 200; ++i) features.push_back({i, Vector3d(u(rng), u(rng), depth(rng))});
  const auto a = kernels::serial::build_contributions(rig, orient, means, features);
  const auto b = kernels::omp::build_contributions(rig, orient, means, features, 4);
  ASSERT_EQ(a.size(), b.size());
  int triangulable = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    EXPECT_EQ(a[i].triangulable, b[i].triangulable);
    EXPECT_EQ(a[i].hf.mat(), b[i].hf.mat());
    triangulable += a[i].triangulable ? 1 : 0;
  }
  EXPECT_GT(triangulable, 0);
}

}  // namespace
}  // namespace fsel
