#pragma once

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fsel/error.hpp"

namespace fsel {

using Eigen::MatrixXd;
using Eigen::Matrix3d;
using Eigen::RowVectorXd;
using Eigen::Vector3d;
using Eigen::VectorXd;

/// Dense symmetric matrix. Construction symmetrizes (m + m^T)/2, so every
/// factorization downstream sees exact symmetry.
class SymMatrix {
 public:
  SymMatrix() = default;

  /// Checked construction: rejects non-square, empty, non-finite or visibly
  /// asymmetric input (entry mismatch above 1e-10 relative to max |m_ij|).
  explicit SymMatrix(const MatrixXd& m);

  /// Unchecked symmetrization for matrices that are symmetric in exact
  /// arithmetic (products like F^T F) but carry rounding asymmetry.
  static SymMatrix symmetrize(const MatrixXd& m);
  static SymMatrix zero(Eigen::Index dim);
  static SymMatrix identity(Eigen::Index dim);

  Eigen::Index dim() const { return m_.rows(); }
  const MatrixXd& mat() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
  double trace() const { return m_.trace(); }

  SymMatrix& operator+=(const SymMatrix& o);
  SymMatrix& operator-=(const SymMatrix& o);
  SymMatrix& operator*=(double s);
  friend SymMatrix operator+(SymMatrix a, const SymMatrix& b) { return a += b; }
  friend SymMatrix operator-(SymMatrix a, const SymMatrix& b) { return a -= b; }
  friend SymMatrix operator*(double s, SymMatrix a) { return a *= s; }

 private:
  struct Raw {};
  SymMatrix(Raw, MatrixXd m) : m_(std::move(m)) {}
  MatrixXd m_;
};

/// One term w * v v^T of an orthogonal rank-one decomposition; v is unit norm.
struct RankOneTerm {
  VectorXd vector;
  double weight = 0.0;

  /// h with h h^T == weight * v v^T.
  VectorXd scaled() const { return std::sqrt(weight) * vector; }
};

/// Loewner-order tolerance used throughout: 1e-9 scaled by trace (at least 1e-9).
double default_psd_tol(const SymMatrix& m);

bool psd_check(const SymMatrix& m, double tol);
bool psd_check(const SymMatrix& m);
bool loewner_geq(const SymMatrix& a, const SymMatrix& b, double tol);
bool loewner_geq(const SymMatrix& a, const SymMatrix& b);

double logdet(const SymMatrix& m);
double min_eig(const SymMatrix& m);
double max_eig(const SymMatrix& m);

/// Tr(m^{-1}) through the Cholesky factor: ||L^{-1}||_F^2.
double trace_inverse(const SymMatrix& m);
/// m^{-1} via Cholesky; throws kNotPositiveDefinite.
SymMatrix inverse_pd(const SymMatrix& m);

/// Orthogonal decomposition m = sum_i w_i v_i v_i^T. Eigenvalues below
/// 1e-12 * trace(m) are dropped.
std::vector<RankOneTerm> rank_one_split(const SymMatrix& m);
SymMatrix reassemble(std::span<const RankOneTerm> terms, Eigen::Index dim);

struct WeightedTerm {
  double weight = 0.0;  // w
  RankOneTerm term;
};

/// Smallest gamma > 0 with sum_k w_k (gamma - w_k) h_k h_k^T PSD, by bisection
/// on [0, max w] to relative precision 1e-6.
double chi_infimum(std::span<const WeightedTerm> terms);

/// Elementwise Neumaier-compensated accumulator for sums of many matrices.
class MatrixAccumulator {
 public:
  explicit MatrixAccumulator(Eigen::Index dim)
      : sum_(MatrixXd::Zero(dim, dim)), comp_(MatrixXd::Zero(dim, dim)) {}
  explicit MatrixAccumulator(const MatrixXd& init)
      : sum_(init), comp_(MatrixXd::Zero(init.rows(), init.cols())) {}

  void add(const MatrixXd& m);
  MatrixXd result() const { return sum_ + comp_; }

 private:
  MatrixXd sum_;
  MatrixXd comp_;
};

void require_finite(const MatrixXd& m, const char* what);

}  // namespace fsel
