#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fsel/motion.hpp"
#include "fsel/numerics.hpp"
#include "fsel/vision.hpp"

namespace fsel {

using Rng = std::mt19937_64;

/// Independent stream seed for (master, label, index); splitmix64 mixing.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index = 0);

enum class Method { kLeverage, kUniform, kGreedy };
enum class Measure { kVariance, kEntropy, kSpectral };  // rho_v, rho_e, rho_lambda

const char* to_string(Method m);
const char* to_string(Measure m);
Method parse_method(std::string_view s);
Measure parse_measure(std::string_view s);

/// Prior plus the triangulable candidates Theta_t.
struct CandidateSet {
  InformationState prior;
  std::vector<FeatureContribution> contributions;

  int size() const { return static_cast<int>(contributions.size()); }
  Eigen::Index dim() const { return prior.h.dim(); }
  /// Throws unless every contribution matches the prior dimension.
  void validate() const;
};

/// Keeps only triangulable contributions.
CandidateSet make_candidate_set(InformationState prior, std::vector<FeatureContribution> all);

struct ScoreTable {
  VectorXd r;   // leverage scores
  VectorXd pi;  // r / n
  Eigen::Index n = 0;
};

struct SelectionResult {
  Method method = Method::kLeverage;
  std::vector<int> ids;      // selected feature ids, ascending
  std::vector<int> indices;  // positions in CandidateSet::contributions, ascending
  SymMatrix h;
  double measure = 0.0;
  double elapsed = 0.0;  // seconds
  int restart = -1;
};

/// Execution knob for the parallel kernels; workers <= 1 runs the serial reference.
struct Exec {
  int workers = 1;
};

double evaluate_measure(Measure m, const SymMatrix& h);

SymMatrix maximal_information(const CandidateSet& c);

/// H-bar^f = H-bar / N + H^f.
SymMatrix augmented_contribution(const CandidateSet& c, int index);

ScoreTable leverage_scores(const CandidateSet& c, Exec exec = {});
ScoreTable uniform_scores(const CandidateSet& c);

/// One run of the sampler: q draws with replacement from scores.pi; duplicates
/// consume budget. Measure is evaluated on the fused matrix.
SelectionResult sample_subset(const CandidateSet& c, const ScoreTable& scores, int q, std::uint64_t seed,
                              Measure measure = Measure::kVariance);

/// Orthogonal rank-one refinement of every augmented contribution.
struct RefinedScores {
  std::vector<std::vector<RankOneTerm>> terms;  // per feature, terms i
  std::vector<std::vector<double>> pi;          // pi_{fi}
  std::vector<double> pi_feature;               // sum_i pi_{fi}
};

RefinedScores refined_scores(const CandidateSet& c);

struct AnalysisResult {
  SelectionResult selection;
  std::map<std::pair<int, int>, double> weights;  // (feature index, term index) -> w
  double chi = 0.0;
  SymMatrix h_w;  // sum w(f,i) H-bar^{f,i}
};

/// Sampler with the bookkeeping lines: the feature sequence is the one
/// sample_subset draws for the same seed; term indices use a separate stream.
AnalysisResult sample_subset_analysis(const CandidateSet& c, const ScoreTable& scores,
                                      const RefinedScores& refined, int q, std::uint64_t seed,
                                      Measure measure = Measure::kVariance);

SelectionResult greedy_select(const CandidateSet& c, int q, Measure measure, Exec exec = {});

SelectionResult uniform_select(const CandidateSet& c, int q, std::uint64_t seed,
                               Measure measure = Measure::kVariance);

/// p restarts of the sampler; restart k uses derive_seed(seed, "restart", k).
/// Returns the minimal-measure run (lowest k on ties). Timing covers the score
/// computation and every restart.
SelectionResult best_of_restarts(const CandidateSet& c, int q, Measure measure, int restarts,
                                 std::uint64_t seed, Exec exec = {});
SelectionResult best_of_uniform_restarts(const CandidateSet& c, int q, Measure measure, int restarts,
                                         std::uint64_t seed, Exec exec = {});

SelectionResult run_method(Method method, const CandidateSet& c, int q, Measure measure, int restarts,
                           std::uint64_t seed, Exec exec = {});

int default_budget(int n_candidates);

struct Certificate {
  double factor = 0.0;  // (1 - eps) / (4 chi_bar)
  bool loewner = false;
  // Losses relative to using every candidate, bounded through the Loewner factor.
  double loss_v = 0.0, bound_v = 0.0;
  double loss_e = 0.0, bound_e = 0.0;
  double loss_lambda = 0.0, bound_lambda = 0.0;
  bool pass_v = false, pass_e = false, pass_lambda = false;
  // The inequalities with the sign convention as printed; they hold whenever
  // 4 chi_bar >= 1 - eps because rho(Theta) <= rho(Phi).
  bool literal_v = false, literal_e = false, literal_lambda = false;

  bool measures_pass() const { return pass_v && pass_e && pass_lambda; }
};

Certificate certify_bounds(const CandidateSet& c, const SymMatrix& h_selected, double eps, double chi_bar);

struct CertificationReport {
  int q = 0;
  double eps = 0.0;
  double n_log_n_over_eps2 = 0.0;
  std::vector<double> chi;
  double chi_bar = 0.0;
  double chi_stderr = 0.0;
  std::vector<Certificate> runs;
  Certificate full_set;  // Phi = Theta sanity row
  double pass_rate = 0.0;
  bool implication_holds = true;  // every Loewner pass also passes all measure bounds
};

CertificationReport certify(const CandidateSet& c, int q, double eps, int seeds, std::uint64_t master_seed);

}  // namespace fsel
