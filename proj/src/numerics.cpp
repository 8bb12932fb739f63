#include "fsel/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace fsel {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidInput: return "invalid input";
    case ErrorKind::kDimensionMismatch: return "dimension mismatch";
    case ErrorKind::kNotPositiveDefinite: return "not positive definite";
    case ErrorKind::kLinearizationFailure: return "linearization failure";
    case ErrorKind::kCrossCovarianceInconsistency: return "cross-covariance inconsistency";
    case ErrorKind::kDegenerateObservation: return "degenerate observation";
    case ErrorKind::kFusionShape: return "fusion shape";
    case ErrorKind::kUndefinedGap: return "undefined gap";
    case ErrorKind::kPropagationAbort: return "propagation abort";
    case ErrorKind::kConfig: return "config";
  }
  return "unknown";
}

void require_finite(const MatrixXd& m, const char* what) {
  if (!m.allFinite()) {
    throw Error(ErrorKind::kInvalidInput, std::string(what) + " has non-finite entries");
  }
}

SymMatrix::SymMatrix(const MatrixXd& m) {
  if (m.rows() == 0 || m.rows() != m.cols()) {
    throw Error(ErrorKind::kInvalidInput, "symmetric matrix must be square with dim >= 1");
  }
  require_finite(m, "symmetric matrix");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw Error(ErrorKind::kInvalidInput, "matrix is not symmetric");
  }
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::symmetrize(const MatrixXd& m) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorKind::kDimensionMismatch, "symmetrize needs a square matrix");
  }
  return SymMatrix(Raw{}, 0.5 * (m + m.transpose()));
}

SymMatrix SymMatrix::zero(Eigen::Index dim) { return SymMatrix(Raw{}, MatrixXd::Zero(dim, dim)); }

SymMatrix SymMatrix::identity(Eigen::Index dim) {
  return SymMatrix(Raw{}, MatrixXd::Identity(dim, dim));
}

SymMatrix& SymMatrix::operator+=(const SymMatrix& o) {
  if (o.dim() != dim()) throw Error(ErrorKind::kDimensionMismatch, "SymMatrix +=");
  m_ += o.m_;
  return *this;
}

SymMatrix& SymMatrix::operator-=(const SymMatrix& o) {
  if (o.dim() != dim()) throw Error(ErrorKind::kDimensionMismatch, "SymMatrix -=");
  m_ -= o.m_;
  return *this;
}

SymMatrix& SymMatrix::operator*=(double s) {
  m_ *= s;
  return *this;
}

double default_psd_tol(const SymMatrix& m) {
  return 1e-9 * std::max(1.0, std::abs(m.trace()));
}

namespace {

Eigen::VectorXd eigenvalues(const SymMatrix& m) {
  require_finite(m.mat(), "symmetric matrix");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m.mat(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) {
    throw Error(ErrorKind::kInvalidInput, "eigenvalue solver did not converge");
  }
  return es.eigenvalues();
}

Eigen::LLT<MatrixXd> cholesky(const SymMatrix& m) {
  require_finite(m.mat(), "symmetric matrix");
  Eigen::LLT<MatrixXd> llt(m.mat());
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::kNotPositiveDefinite, "Cholesky factorization failed");
  }
  return llt;
}

}  // namespace

bool psd_check(const SymMatrix& m, double tol) { return eigenvalues(m)(0) >= -tol; }

bool psd_check(const SymMatrix& m) { return psd_check(m, default_psd_tol(m)); }

bool loewner_geq(const SymMatrix& a, const SymMatrix& b, double tol) {
  if (a.dim() != b.dim()) throw Error(ErrorKind::kDimensionMismatch, "loewner_geq");
  return psd_check(a - b, tol);
}

bool loewner_geq(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim() != b.dim()) throw Error(ErrorKind::kDimensionMismatch, "loewner_geq");
  const double tol = 1e-9 * std::max({1.0, std::abs(a.trace()), std::abs(b.trace())});
  return psd_check(a - b, tol);
}

double logdet(const SymMatrix& m) {
  const auto llt = cholesky(m);
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

double min_eig(const SymMatrix& m) { return eigenvalues(m)(0); }

double max_eig(const SymMatrix& m) {
  const auto ev = eigenvalues(m);
  return ev(ev.size() - 1);
}

double trace_inverse(const SymMatrix& m) {
  const auto llt = cholesky(m);
  MatrixXd linv = MatrixXd::Identity(m.dim(), m.dim());
  llt.matrixL().solveInPlace(linv);
  return linv.squaredNorm();
}

SymMatrix inverse_pd(const SymMatrix& m) {
  const auto llt = cholesky(m);
  return SymMatrix::symmetrize(llt.solve(MatrixXd::Identity(m.dim(), m.dim())));
}

std::vector<RankOneTerm> rank_one_split(const SymMatrix& m) {
  require_finite(m.mat(), "symmetric matrix");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(m.mat());
  if (es.info() != Eigen::Success) {
    throw Error(ErrorKind::kInvalidInput, "eigen decomposition did not converge");
  }
  const double tr = m.trace();
  if (es.eigenvalues()(0) < -default_psd_tol(m)) {
    throw Error(ErrorKind::kInvalidInput, "rank_one_split needs a PSD matrix");
  }
  std::vector<RankOneTerm> terms;
  const double floor = 1e-12 * std::abs(tr);
  for (Eigen::Index i = m.dim() - 1; i >= 0; --i) {
    const double lambda = es.eigenvalues()(i);
    if (lambda <= floor) break;
    terms.push_back({es.eigenvectors().col(i), lambda});
  }
  return terms;
}

SymMatrix reassemble(std::span<const RankOneTerm> terms, Eigen::Index dim) {
  MatrixXd m = MatrixXd::Zero(dim, dim);
  for (const auto& t : terms) {
    if (t.vector.size() != dim) throw Error(ErrorKind::kDimensionMismatch, "reassemble");
    m.noalias() += t.weight * t.vector * t.vector.transpose();
  }
  return SymMatrix::symmetrize(m);
}

double chi_infimum(std::span<const WeightedTerm> terms) {
  if (terms.empty()) throw Error(ErrorKind::kInvalidInput, "chi_infimum of no terms");
  const Eigen::Index dim = terms.front().term.vector.size();
  double wmax = 0.0;
  MatrixXd a = MatrixXd::Zero(dim, dim);  // sum w h h^T
  MatrixXd b = MatrixXd::Zero(dim, dim);  // sum w^2 h h^T
  for (const auto& wt : terms) {
    if (!(wt.weight >= 0.0) || !std::isfinite(wt.weight)) {
      throw Error(ErrorKind::kInvalidInput, "chi_infimum weights must be finite and >= 0");
    }
    if (wt.term.vector.size() != dim) throw Error(ErrorKind::kDimensionMismatch, "chi_infimum");
    wmax = std::max(wmax, wt.weight);
    const MatrixXd hh = wt.term.weight * wt.term.vector * wt.term.vector.transpose();
    a += wt.weight * hh;
    b += wt.weight * wt.weight * hh;
  }
  if (wmax <= 0.0) throw Error(ErrorKind::kInvalidInput, "chi_infimum needs a positive weight");

  const auto feasible = [&](double gamma) {
    const SymMatrix m = SymMatrix::symmetrize(gamma * a - b);
    const double tol = 1e-9 * std::max(1.0, gamma * a.trace() + b.trace());
    return psd_check(m, tol);
  };
  // gamma = max w makes every coefficient nonnegative.
  double lo = 0.0;
  double hi = wmax;
  while (hi - lo > 1e-6 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

void MatrixAccumulator::add(const MatrixXd& m) {
  if (m.rows() != sum_.rows() || m.cols() != sum_.cols()) {
    throw Error(ErrorKind::kDimensionMismatch, "MatrixAccumulator::add");
  }
  for (Eigen::Index j = 0; j < sum_.cols(); ++j) {
    for (Eigen::Index i = 0; i < sum_.rows(); ++i) {
      const double s = sum_(i, j);
      const double x = m(i, j);
      const double t = s + x;
      comp_(i, j) += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
      sum_(i, j) = t;
    }
  }
}

}  // namespace fsel
