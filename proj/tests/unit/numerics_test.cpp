#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "fsel/checks/oracles.hpp"
#include "fsel/numerics.hpp"
#include "fsel/selection.hpp"

namespace fsel {
namespace {

SymMatrix diag(std::initializer_list<double> d) {
  VectorXd v(static_cast<Eigen::Index>(d.size()));
  Eigen::Index i = 0;
  for (double x : d) v(i++) = x;
  return SymMatrix(MatrixXd(v.asDiagonal()));
}

TEST(SymMatrix, RejectsAsymmetricAndNonFinite) {
  MatrixXd m(2, 2);
  m << 1, 2, 0, 1;
  EXPECT_THROW(SymMatrix{m}, Error);
  m << 1, std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN(), 1;
  EXPECT_THROW(SymMatrix{m}, Error);
  EXPECT_THROW(SymMatrix{MatrixXd(2, 3)}, Error);
}

TEST(PsdCheck, IdentityAndIndefinite) {
  EXPECT_TRUE(psd_check(SymMatrix::identity(3)));
  EXPECT_FALSE(psd_check(diag({1.0, -1.0})));
}

TEST(PsdCheck, GramMatricesArePsd) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const MatrixXd a = checks::random_matrix(rng, 4, 7);
    EXPECT_TRUE(psd_check(SymMatrix::symmetrize(a.transpose() * a)));
  }
}

TEST(Loewner, ScaledIdentity) {
  const auto i3 = SymMatrix::identity(3);
  EXPECT_TRUE(loewner_geq(2.0 * i3, i3));
  EXPECT_FALSE(loewner_geq(i3, 2.0 * i3));
}

TEST(Loewner, AddingPsdTermsIsMonotone) {
  Rng rng(5);
  SymMatrix h = SymMatrix::symmetrize(checks::random_spd(rng, 6));
  for (int k = 0; k < 10; ++k) {
    const MatrixXd a = checks::random_matrix(rng, 2, 6);
    const SymMatrix bigger = h + SymMatrix::symmetrize(a.transpose() * a);
    EXPECT_TRUE(loewner_geq(bigger, h));
    h = bigger;
  }
}

TEST(Logdet, Examples) {
  EXPECT_DOUBLE_EQ(logdet(SymMatrix::identity(4)), 0.0);
  EXPECT_NEAR(logdet(diag({2.0, 2.0})), 2.0 * std::log(2.0), 1e-14);
  EXPECT_THROW(logdet(diag({1.0, -1.0})), Error);
}

TEST(Logdet, MatchesSpectrum) {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd m = checks::random_spd(rng, 8);
    const double oracle = checks::measure_from_spectrum(Measure::kEntropy, m);
    EXPECT_NEAR(logdet(SymMatrix(m)), -oracle, 1e-10 * (1.0 + std::abs(oracle)));
  }
}

TEST(Logdet, MonotoneUnderLoewner) {
  Rng rng(8);
  const SymMatrix a = SymMatrix::symmetrize(checks::random_spd(rng, 5));
  const MatrixXd g = checks::random_matrix(rng, 5, 5);
  const SymMatrix b = a + SymMatrix::symmetrize(g * g.transpose());
  EXPECT_GE(logdet(b), logdet(a));
}

TEST(MinEig, DiagonalAndSpectrum) {
  EXPECT_NEAR(min_eig(diag({3.0, 1.0, 2.0})), 1.0, 1e-14);
  EXPECT_NEAR(max_eig(diag({3.0, 1.0, 2.0})), 3.0, 1e-14);
  Rng rng(9);
  const MatrixXd m = checks::random_spd(rng, 6, 0.5, 4.0);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  EXPECT_NEAR(min_eig(SymMatrix(m)), es.eigenvalues()(0), 1e-12);
}

TEST(TraceInverse, MatchesExplicitInverse) {
  Rng rng(10);
  const MatrixXd m = checks::random_spd(rng, 7);
  EXPECT_NEAR(trace_inverse(SymMatrix(m)), m.inverse().trace(), 1e-10);
  EXPECT_TRUE(inverse_pd(SymMatrix(m)).mat().isApprox(m.inverse(), 1e-10));
  EXPECT_THROW(trace_inverse(diag({1.0, 0.0})), Error);
}

TEST(RankOneSplit, IdentityGivesUnitTerms) {
  const auto terms = rank_one_split(SymMatrix::identity(2));
  ASSERT_EQ(terms.size(), 2u);
  for (const auto& t : terms) {
    EXPECT_NEAR(t.weight, 1.0, 1e-14);
    EXPECT_NEAR(t.vector.norm(), 1.0, 1e-14);
  }
}

TEST(RankOneSplit, OuterProductRecoversVectorUpToSign) {
  VectorXd h(3);
  h << 1.0, -2.0, 0.5;
  const auto terms = rank_one_split(SymMatrix::symmetrize(h * h.transpose()));
  ASSERT_EQ(terms.size(), 1u);
  const VectorXd s = terms[0].scaled();
  EXPECT_LT(std::min((s - h).norm(), (s + h).norm()), 1e-12);
}

TEST(RankOneSplit, RandomReassembly) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const MatrixXd a = checks::random_matrix(rng, 3, 6);
    const SymMatrix m = SymMatrix::symmetrize(a.transpose() * a);
    const auto terms = rank_one_split(m);
    EXPECT_EQ(terms.size(), 3u);
    const SymMatrix back = reassemble(terms, 6);
    EXPECT_LT((back.mat() - m.mat()).norm(), 1e-10 * m.mat().norm());
    for (std::size_t i = 0; i < terms.size(); ++i) {
      for (std::size_t j = i + 1; j < terms.size(); ++j) {
        EXPECT_NEAR(terms[i].vector.dot(terms[j].vector), 0.0, 1e-10);
      }
    }
  }
}

TEST(RankOneSplit, RejectsIndefinite) { EXPECT_THROW(rank_one_split(diag({1.0, -1.0})), Error); }

std::vector<WeightedTerm> orthonormal_terms(const std::vector<double>& w) {
  std::vector<WeightedTerm> out;
  const auto n = static_cast<Eigen::Index>(w.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    RankOneTerm t{VectorXd::Unit(n, i), 1.0};
    out.push_back({w[static_cast<std::size_t>(i)], t});
  }
  return out;
}

TEST(ChiInfimum, EqualWeightsGiveTheWeight) {
  const auto terms = orthonormal_terms({0.7, 0.7, 0.7});
  EXPECT_NEAR(chi_infimum(terms), 0.7, 1e-6 * 0.7);
}

TEST(ChiInfimum, SingleTerm) {
  const auto terms = orthonormal_terms({2.5});
  EXPECT_NEAR(chi_infimum(terms), 2.5, 1e-6 * 2.5);
}

TEST(ChiInfimum, BoundedByWeightRange) {
  Rng rng(12);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<WeightedTerm> terms;
    double lo = 1e300, hi = 0.0;
    for (int k = 0; k < 6; ++k) {
      const double w = u(rng);
      lo = std::min(lo, w);
      hi = std::max(hi, w);
      terms.push_back({w, RankOneTerm{checks::random_unit(rng), u(rng)}});
    }
    const double chi = chi_infimum(terms);
    EXPECT_GE(chi, lo * (1.0 - 1e-6));
    EXPECT_LE(chi, hi * (1.0 + 1e-6));
  }
}

TEST(ChiInfimum, MatchesGridOracle) {
  Rng rng(13);
  std::uniform_real_distribution<double> u(0.2, 2.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<WeightedTerm> terms;
    for (int k = 0; k < 5; ++k) terms.push_back({u(rng), RankOneTerm{checks::random_unit(rng), u(rng)}});
    double wmax = 0.0;
    for (const auto& t : terms) wmax = std::max(wmax, t.weight);
    const int grid = 4000;
    const double oracle = checks::chi_grid_oracle(terms, grid);
    EXPECT_NEAR(chi_infimum(terms), oracle, 2.0 * wmax / grid + 1e-6 * wmax);
  }
}

TEST(ChiInfimum, ZeroWeightsThrow) {
  const auto terms = orthonormal_terms({0.0, 0.0});
  EXPECT_THROW(chi_infimum(terms), Error);
  EXPECT_THROW(chi_infimum(std::vector<WeightedTerm>{}), Error);
}

TEST(MatrixAccumulator, CompensatesCancellation) {
  MatrixAccumulator acc(1);
  acc.add(MatrixXd::Constant(1, 1, 1e16));
  for (int i = 0; i < 1000; ++i) acc.add(MatrixXd::Constant(1, 1, 1.0));
  acc.add(MatrixXd::Constant(1, 1, -1e16));
  EXPECT_DOUBLE_EQ(acc.result()(0, 0), 1000.0);
  EXPECT_THROW(acc.add(MatrixXd::Zero(2, 2)), Error);
}

}  // namespace
}  // namespace fsel
