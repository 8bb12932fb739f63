#include "fsel/kernels.hpp"

#include <exception>
#include <limits>
#include <mutex>

#include <omp.h>

namespace fsel::kernels {

namespace {

// Exceptions must not cross an OpenMP region boundary; keep the first one.
class ExceptionSlot {
 public:
  template <typename F>
  void run(F&& f) {
    try {
      f();
    } catch (...) {
      std::lock_guard lock(mu_);
      if (!ptr_) ptr_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (ptr_) std::rethrow_exception(ptr_);
  }

 private:
  std::mutex mu_;
  std::exception_ptr ptr_;
};

bool better(double value, int id, const Pick& best, int best_id) {
  return best.index < 0 || value < best.value || (value == best.value && id < best_id);
}

Pick reduce_picks(const CandidateSet& c, std::span<const double> values, std::span<const char> taken) {
  Pick best;
  int best_id = std::numeric_limits<int>::max();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (taken[i]) continue;
    const int id = c.contributions[i].id;
    if (better(values[i], id, best, best_id)) {
      best = {static_cast<int>(i), values[i]};
      best_id = id;
    }
  }
  return best;
}

int reduce_restarts(std::span<const RestartOutcome> outcomes) {
  int best = 0;
  for (std::size_t k = 1; k < outcomes.size(); ++k) {
    if (outcomes[k].measure < outcomes[static_cast<std::size_t>(best)].measure) best = static_cast<int>(k);
  }
  return best;
}

double candidate_value(const CandidateSet& c, const SymMatrix& h, std::size_t i, Measure m) {
  return evaluate_measure(m, h + c.contributions[i].hf);
}

}  // namespace

RestartOutcome sample_once(const CandidateSet& c, const VectorXd& pi, int q, Measure m, std::uint64_t seed) {
  RestartOutcome out;
  MatrixXd h = c.prior.h.mat();
  if (q > 0 && c.size() > 0) {
    Rng rng(seed);
    std::discrete_distribution<int> draw(pi.data(), pi.data() + pi.size());
    std::vector<char> chosen(static_cast<std::size_t>(c.size()), 0);
    for (int k = 0; k < q; ++k) {
      const int f = draw(rng);
      if (chosen[static_cast<std::size_t>(f)]) continue;
      chosen[static_cast<std::size_t>(f)] = 1;
      h += c.contributions[static_cast<std::size_t>(f)].hf.mat();
    }
    for (int f = 0; f < c.size(); ++f) {
      if (chosen[static_cast<std::size_t>(f)]) out.indices.push_back(f);
    }
  }
  out.h = SymMatrix::symmetrize(h);
  out.measure = evaluate_measure(m, out.h);
  return out;
}

namespace serial {

std::vector<FeatureContribution> build_contributions(const CameraRig& rig,
                                                     std::span<const Matrix3d> orientations,
                                                     std::span<const Vector3d> means,
                                                     std::span<const Feature> features) {
  std::vector<FeatureContribution> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(build_contribution(rig, orientations, means, f));
  return out;
}

VectorXd score_traces(const CandidateSet& c, const SymMatrix& h_theta_inv) {
  const double n_inv = 1.0 / static_cast<double>(c.size());
  const double prior_part = n_inv * h_theta_inv.mat().cwiseProduct(c.prior.h.mat()).sum();
  VectorXd r(c.size());
  for (int f = 0; f < c.size(); ++f) {
    r(f) = prior_part +
           h_theta_inv.mat().cwiseProduct(c.contributions[static_cast<std::size_t>(f)].hf.mat()).sum();
  }
  return r;
}

Pick greedy_scan(const CandidateSet& c, const SymMatrix& h, std::span<const char> taken, Measure m) {
  std::vector<double> values(static_cast<std::size_t>(c.size()), 0.0);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!taken[i]) values[i] = candidate_value(c, h, i, m);
  }
  return reduce_picks(c, values, taken);
}

int best_restart(const CandidateSet& c, const VectorXd& pi, int q, Measure m, int restarts,
                 std::uint64_t seed, std::vector<RestartOutcome>& outcomes) {
  outcomes.assign(static_cast<std::size_t>(restarts), {});
  for (int k = 0; k < restarts; ++k) {
    outcomes[static_cast<std::size_t>(k)] =
        sample_once(c, pi, q, m, derive_seed(seed, "restart", static_cast<std::uint64_t>(k)));
  }
  return reduce_restarts(outcomes);
}

}  // namespace serial

namespace omp {

std::vector<FeatureContribution> build_contributions(const CameraRig& rig,
                                                     std::span<const Matrix3d> orientations,
                                                     std::span<const Vector3d> means,
                                                     std::span<const Feature> features, int workers) {
  std::vector<FeatureContribution> out(features.size());
  ExceptionSlot err;
  const auto count = static_cast<long>(features.size());
#pragma omp parallel for num_threads(workers) schedule(dynamic, 8)
  for (long i = 0; i < count; ++i) {
    err.run([&] {
      out[static_cast<std::size_t>(i)] =
          build_contribution(rig, orientations, means, features[static_cast<std::size_t>(i)]);
    });
  }
  err.rethrow();
  return out;
}

VectorXd score_traces(const CandidateSet& c, const SymMatrix& h_theta_inv, int workers) {
  const double n_inv = 1.0 / static_cast<double>(c.size());
  const double prior_part = n_inv * h_theta_inv.mat().cwiseProduct(c.prior.h.mat()).sum();
  VectorXd r(c.size());
  const int count = c.size();
#pragma omp parallel for num_threads(workers) schedule(static)
  for (int f = 0; f < count; ++f) {
    r(f) = prior_part +
           h_theta_inv.mat().cwiseProduct(c.contributions[static_cast<std::size_t>(f)].hf.mat()).sum();
  }
  return r;
}

Pick greedy_scan(const CandidateSet& c, const SymMatrix& h, std::span<const char> taken, Measure m,
                 int workers) {
  std::vector<double> values(static_cast<std::size_t>(c.size()), 0.0);
  ExceptionSlot err;
  const auto count = static_cast<long>(values.size());
#pragma omp parallel for num_threads(workers) schedule(dynamic, 4)
  for (long i = 0; i < count; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    if (!taken[idx]) err.run([&] { values[idx] = candidate_value(c, h, idx, m); });
  }
  err.rethrow();
  return reduce_picks(c, values, taken);
}

int best_restart(const CandidateSet& c, const VectorXd& pi, int q, Measure m, int restarts,
                 std::uint64_t seed, std::vector<RestartOutcome>& outcomes, int workers) {
  outcomes.assign(static_cast<std::size_t>(restarts), {});
  ExceptionSlot err;
#pragma omp parallel for num_threads(workers) schedule(dynamic, 1)
  for (int k = 0; k < restarts; ++k) {
    err.run([&] {
      outcomes[static_cast<std::size_t>(k)] =
          sample_once(c, pi, q, m, derive_seed(seed, "restart", static_cast<std::uint64_t>(k)));
    });
  }
  err.rethrow();
  return reduce_restarts(outcomes);
}

}  // namespace omp

std::vector<FeatureContribution> build_contributions(const CameraRig& rig,
                                                     std::span<const Matrix3d> orientations,
                                                     std::span<const Vector3d> means,
                                                     std::span<const Feature> features, Exec exec) {
  if (exec.workers <= 1) return serial::build_contributions(rig, orientations, means, features);
  return omp::build_contributions(rig, orientations, means, features, exec.workers);
}

}  // namespace fsel::kernels
