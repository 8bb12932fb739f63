#include "fsel/checks/oracles.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace fsel::checks {

MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  std::normal_distribution<double> normal;
  MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  }
  return m;
}

MatrixXd random_orthogonal(Rng& rng, Eigen::Index n) {
  Eigen::HouseholderQR<MatrixXd> qr(random_matrix(rng, n, n));
  return qr.householderQ() * MatrixXd::Identity(n, n);
}

MatrixXd random_spd(Rng& rng, Eigen::Index n, double lo, double hi) {
  std::uniform_real_distribution<double> eig(lo, hi);
  const MatrixXd q = random_orthogonal(rng, n);
  VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) d(i) = eig(rng);
  const MatrixXd m = q * d.asDiagonal() * q.transpose();
  return 0.5 * (m + m.transpose());
}

Matrix3d random_rotation(Rng& rng) {
  std::normal_distribution<double> normal;
  Eigen::Quaterniond quat(normal(rng), normal(rng), normal(rng), normal(rng));
  quat.normalize();
  return quat.toRotationMatrix();
}

Vector3d random_unit(Rng& rng) {
  std::normal_distribution<double> normal;
  Vector3d v(normal(rng), normal(rng), normal(rng));
  return v.normalized();
}

double measure_from_spectrum(Measure m, const MatrixXd& h) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(h);
  const VectorXd ev = es.eigenvalues();
  switch (m) {
    case Measure::kVariance: return ev.cwiseInverse().sum();
    case Measure::kEntropy: return -ev.array().log().sum();
    case Measure::kSpectral: return 1.0 / ev(0);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

Vector3d cross_components(const Vector3d& u, const Vector3d& v) {
  return {u(1) * v(2) - u(2) * v(1), u(2) * v(0) - u(0) * v(2), u(0) * v(1) - u(1) * v(0)};
}

MatrixXd marginal_information_oracle(const MatrixXd& f, const MatrixXd& e, double sigma) {
  const Eigen::Index n = f.cols();
  MatrixXd a(f.rows(), n + 3);
  a << f, e;
  MatrixXd joint = a.transpose() * a / (sigma * sigma);
  joint.topLeftCorner(n, n) += MatrixXd::Identity(n, n);
  const MatrixXd cov = joint.fullPivLu().inverse();
  const MatrixXd marg = cov.topLeftCorner(n, n).fullPivLu().inverse();
  return marg - MatrixXd::Identity(n, n);
}

BatchPosterior normal_equations_posterior(const GaussianBelief& prior,
                                          const std::vector<const FeatureContribution*>& features,
                                          const std::vector<VectorXd>& z, double sigma) {
  const Eigen::Index n = prior.cov.dim();
  const Eigen::Index dim = n + 3 * static_cast<Eigen::Index>(features.size());
  MatrixXd j = MatrixXd::Zero(dim, dim);
  VectorXd rhs = VectorXd::Zero(dim);
  const MatrixXd prior_info = prior.cov.mat().fullPivLu().inverse();
  j.topLeftCorner(n, n) = prior_info;
  rhs.head(n) = prior_info * prior.mean;
  const double w = 1.0 / (sigma * sigma);
  for (std::size_t k = 0; k < features.size(); ++k) {
    const auto& c = *features[k];
    MatrixXd a = MatrixXd::Zero(c.f.rows(), dim);
    a.leftCols(n) = c.f;
    a.block(0, n + 3 * static_cast<Eigen::Index>(k), c.e.rows(), 3) = c.e;
    j += w * a.transpose() * a;
    rhs += w * a.transpose() * z[k];
  }
  const Eigen::FullPivLU<MatrixXd> lu(j);
  BatchPosterior out;
  out.mean = lu.solve(rhs).head(n);
  out.cov = lu.inverse().topLeftCorner(n, n);
  return out;
}

MatrixXd monte_carlo_covariance(const std::vector<Matrix3d>& a, const Matrix3d& lambda, const Matrix3d& sigma0,
                                long rollouts, std::uint64_t seed) {
  const auto horizon = static_cast<Eigen::Index>(a.size());
  const Eigen::Index n = 3 * (horizon + 1);
  Rng rng(seed);
  std::normal_distribution<double> normal;
  const Matrix3d l0 = Eigen::LLT<Matrix3d>(sigma0).matrixL();
  const Matrix3d ll = Eigen::LLT<Matrix3d>(lambda).matrixL();
  MatrixXd second = MatrixXd::Zero(n, n);
  VectorXd first = VectorXd::Zero(n);
  VectorXd x(n);
  for (long r = 0; r < rollouts; ++r) {
    x.segment<3>(0) = l0 * Vector3d(normal(rng), normal(rng), normal(rng));
    for (Eigen::Index k = 1; k <= horizon; ++k) {
      x.segment<3>(3 * k) = a[static_cast<std::size_t>(k - 1)] * x.segment<3>(3 * (k - 1)) +
                            ll * Vector3d(normal(rng), normal(rng), normal(rng));
    }
    first += x;
    second.selfadjointView<Eigen::Lower>().rankUpdate(x);
  }
  MatrixXd s = second.selfadjointView<Eigen::Lower>();
  const double cnt = static_cast<double>(rollouts);
  first /= cnt;
  return s / cnt - first * first.transpose();
}

Matrix3d central_difference(const std::function<Vector3d(const Vector3d&)>& fn, const Vector3d& x, double step) {
  Matrix3d jac;
  for (int i = 0; i < 3; ++i) {
    Vector3d dx = Vector3d::Zero();
    dx(i) = step;
    jac.col(i) = (fn(x + dx) - fn(x - dx)) / (2.0 * step);
  }
  return jac;
}

double chi_grid_oracle(std::span<const WeightedTerm> terms, int grid_points) {
  const Eigen::Index dim = terms.front().term.vector.size();
  double wmax = 0.0;
  for (const auto& t : terms) wmax = std::max(wmax, t.weight);
  for (int g = 1; g <= grid_points; ++g) {
    const double gamma = wmax * g / grid_points;
    MatrixXd m = MatrixXd::Zero(dim, dim);
    double scale = 0.0;
    for (const auto& t : terms) {
      const VectorXd h = t.term.scaled();
      m += t.weight * (gamma - t.weight) * h * h.transpose();
      scale += t.weight * (gamma + t.weight) * h.squaredNorm();
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
    if (es.eigenvalues()(0) >= -1e-9 * std::max(1.0, scale)) return gamma;
  }
  return wmax;
}

BruteForce brute_force_best(const CandidateSet& c, int q, Measure m) {
  BruteForce best;
  best.value = std::numeric_limits<double>::infinity();
  const int n = c.size();
  q = std::min(q, n);
  std::vector<char> mask(static_cast<std::size_t>(n), 0);
  std::fill(mask.begin(), mask.begin() + q, 1);
  do {
    MatrixXd h = c.prior.h.mat();
    std::vector<int> idx;
    for (int i = 0; i < n; ++i) {
      if (mask[static_cast<std::size_t>(i)]) {
        h += c.contributions[static_cast<std::size_t>(i)].hf.mat();
        idx.push_back(i);
      }
    }
    const double v = measure_from_spectrum(m, h);
    ++best.subsets;
    if (v < best.value) {
      best.value = v;
      best.indices = idx;
    }
  } while (std::prev_permutation(mask.begin(), mask.end()));
  return best;
}

RandomInstance random_instance(Rng& rng, const InstanceOptions& opts) {
  RandomInstance inst;
  inst.sigma = opts.sigma;
  const int horizon = opts.horizon;

  // Prior: x_k = A x_{k-1} + u_k + w_k with a mildly contracting random A.
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const Matrix3d a = Matrix3d::Identity() * 0.95 + 0.1 * random_matrix(rng, 3, 3);
  const Matrix3d lambda = random_spd(rng, 3, 0.2 * opts.process_noise, 2.0 * opts.process_noise);
  const Matrix3d sigma0 = random_spd(rng, 3, 0.5, 2.0);
  DynamicsSpec spec;
  spec.g = [a](const Vector3d& x, const Vector3d& u) -> Vector3d { return a * x + u; };
  spec.h = [](const Vector3d& u_ref, const Vector3d&) -> Vector3d { return u_ref; };
  spec.jacobian = [a](const Vector3d&, const Vector3d&, const Vector3d&) -> Matrix3d { return a; };
  spec.mode = JacobianMode::kAnalytic;
  spec.process_noise = [lambda](int) { return lambda; };
  std::vector<Vector3d> u_ref;
  for (int k = 0; k < horizon; ++k) u_ref.emplace_back(unit(rng), unit(rng), unit(rng));
  const Vector3d mean0(unit(rng), unit(rng), unit(rng));
  inst.prior = propagate_prior(spec, mean0, sigma0, u_ref, 0).first;

  std::vector<FeatureContribution> all;
  int id = 0;
  while (static_cast<int>(all.size()) < opts.features) {
    std::uniform_int_distribution<int> count(std::min(opts.min_frames, horizon + 1), horizon + 1);
    const int nf = count(rng);
    std::vector<int> frames(static_cast<std::size_t>(horizon + 1));
    std::iota(frames.begin(), frames.end(), 0);
    std::shuffle(frames.begin(), frames.end(), rng);
    frames.resize(static_cast<std::size_t>(nf));
    std::sort(frames.begin(), frames.end());
    std::vector<Matrix3d> rows;
    for (int k = 0; k < nf; ++k) rows.push_back(skew(random_unit(rng)) * random_rotation(rng).transpose());
    auto c = assemble_contribution(id++, horizon, frames, rows, opts.sigma);
    if (c.triangulable) all.push_back(std::move(c));
  }
  inst.set = make_candidate_set(to_information(inst.prior), std::move(all));
  return inst;
}

}  // namespace fsel::checks
