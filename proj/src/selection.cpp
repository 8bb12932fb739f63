#include "fsel/selection.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "fsel/kernels.hpp"

namespace fsel {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<int> ids_of(const CandidateSet& c, const std::vector<int>& indices) {
  std::vector<int> ids;
  ids.reserve(indices.size());
  for (int i : indices) ids.push_back(c.contributions[static_cast<std::size_t>(i)].id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

SelectionResult from_outcome(const CandidateSet& c, Method method, kernels::RestartOutcome out, int restart) {
  SelectionResult r;
  r.method = method;
  r.indices = std::move(out.indices);
  r.ids = ids_of(c, r.indices);
  r.h = std::move(out.h);
  r.measure = out.measure;
  r.restart = restart;
  return r;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the label
  for (unsigned char ch : label) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(master ^ h) + index);
}

const char* to_string(Method m) {
  switch (m) {
    case Method::kLeverage: return "leverage";
    case Method::kUniform: return "uniform";
    case Method::kGreedy: return "greedy";
  }
  return "?";
}

const char* to_string(Measure m) {
  switch (m) {
    case Measure::kVariance: return "rho_v";
    case Measure::kEntropy: return "rho_e";
    case Measure::kSpectral: return "rho_lambda";
  }
  return "?";
}

Method parse_method(std::string_view s) {
  if (s == "leverage") return Method::kLeverage;
  if (s == "uniform") return Method::kUniform;
  if (s == "greedy") return Method::kGreedy;
  throw Error(ErrorKind::kInvalidInput, "unknown method '" + std::string(s) + "'");
}

Measure parse_measure(std::string_view s) {
  if (s == "rho_v" || s == "variance") return Measure::kVariance;
  if (s == "rho_e" || s == "entropy") return Measure::kEntropy;
  if (s == "rho_lambda" || s == "spectral") return Measure::kSpectral;
  throw Error(ErrorKind::kInvalidInput, "unknown measure '" + std::string(s) + "'");
}

void CandidateSet::validate() const {
  for (const auto& c : contributions) {
    if (c.hf.dim() != dim()) throw Error(ErrorKind::kDimensionMismatch, "contribution vs prior dimension");
  }
}

CandidateSet make_candidate_set(InformationState prior, std::vector<FeatureContribution> all) {
  CandidateSet c;
  c.prior = std::move(prior);
  for (auto& f : all) {
    if (f.triangulable) c.contributions.push_back(std::move(f));
  }
  c.validate();
  return c;
}

double evaluate_measure(Measure m, const SymMatrix& h) {
  switch (m) {
    case Measure::kVariance: return trace_inverse(h);
    case Measure::kEntropy: return -logdet(h);
    case Measure::kSpectral: {
      const double lmin = min_eig(h);
      if (!(lmin > 0.0)) throw Error(ErrorKind::kNotPositiveDefinite, "spectral measure");
      return 1.0 / lmin;
    }
  }
  throw Error(ErrorKind::kInvalidInput, "unknown measure");
}

SymMatrix maximal_information(const CandidateSet& c) {
  MatrixAccumulator acc(c.prior.h.mat());
  for (const auto& f : c.contributions) acc.add(f.hf.mat());
  return SymMatrix::symmetrize(acc.result());
}

SymMatrix augmented_contribution(const CandidateSet& c, int index) {
  return (1.0 / static_cast<double>(c.size())) * c.prior.h + c.contributions[static_cast<std::size_t>(index)].hf;
}

ScoreTable leverage_scores(const CandidateSet& c, Exec exec) {
  ScoreTable t;
  t.n = c.dim();
  if (c.size() == 0) return t;
  const SymMatrix h_inv = inverse_pd(maximal_information(c));
  t.r = exec.workers <= 1 ? kernels::serial::score_traces(c, h_inv)
                          : kernels::omp::score_traces(c, h_inv, exec.workers);
  t.pi = t.r / static_cast<double>(t.n);
  return t;
}

ScoreTable uniform_scores(const CandidateSet& c) {
  ScoreTable t;
  t.n = c.dim();
  t.pi = VectorXd::Constant(c.size(), c.size() > 0 ? 1.0 / c.size() : 0.0);
  t.r = t.pi * static_cast<double>(t.n);
  return t;
}

SelectionResult sample_subset(const CandidateSet& c, const ScoreTable& scores, int q, std::uint64_t seed,
                              Measure measure) {
  if (q < 0) throw Error(ErrorKind::kInvalidInput, "budget q must be >= 0");
  const auto start = Clock::now();
  auto r = from_outcome(c, Method::kLeverage, kernels::sample_once(c, scores.pi, q, measure, seed), 0);
  r.elapsed = seconds_since(start);
  return r;
}

RefinedScores refined_scores(const CandidateSet& c) {
  RefinedScores out;
  if (c.size() == 0) return out;
  const SymMatrix h_inv = inverse_pd(maximal_information(c));
  const double n = static_cast<double>(c.dim());
  for (int f = 0; f < c.size(); ++f) {
    auto terms = rank_one_split(augmented_contribution(c, f));
    std::vector<double> pi;
    pi.reserve(terms.size());
    for (const auto& t : terms) {
      pi.push_back(t.weight * t.vector.dot(h_inv.mat() * t.vector) / n);
    }
    out.pi_feature.push_back(std::accumulate(pi.begin(), pi.end(), 0.0));
    out.terms.push_back(std::move(terms));
    out.pi.push_back(std::move(pi));
  }
  return out;
}

AnalysisResult sample_subset_analysis(const CandidateSet& c, const ScoreTable& scores,
                                      const RefinedScores& refined, int q, std::uint64_t seed,
                                      Measure measure) {
  if (q < 0) throw Error(ErrorKind::kInvalidInput, "budget q must be >= 0");
  AnalysisResult out;
  const auto start = Clock::now();
  MatrixXd h = c.prior.h.mat();
  std::vector<char> chosen(static_cast<std::size_t>(c.size()), 0);
  std::vector<int> indices;
  if (q > 0 && c.size() > 0) {
    Rng rng(seed);  // same feature stream as sample_subset
    Rng term_rng(derive_seed(seed, "refined"));
    std::discrete_distribution<int> draw(scores.pi.data(), scores.pi.data() + scores.pi.size());
    for (int k = 0; k < q; ++k) {
      const int f = draw(rng);
      const auto& pif = refined.pi[static_cast<std::size_t>(f)];
      std::discrete_distribution<int> draw_term(pif.begin(), pif.end());
      const int i = draw_term(term_rng);
      out.weights[{f, i}] += 1.0 / (static_cast<double>(q) * pif[static_cast<std::size_t>(i)]);
      if (!chosen[static_cast<std::size_t>(f)]) {
        chosen[static_cast<std::size_t>(f)] = 1;
        h += c.contributions[static_cast<std::size_t>(f)].hf.mat();
      }
    }
    for (int f = 0; f < c.size(); ++f) {
      if (chosen[static_cast<std::size_t>(f)]) indices.push_back(f);
    }
  }
  auto& sel = out.selection;
  sel.method = Method::kLeverage;
  sel.indices = indices;
  sel.ids = ids_of(c, indices);
  sel.h = SymMatrix::symmetrize(h);
  sel.measure = evaluate_measure(measure, sel.h);
  sel.restart = 0;

  MatrixXd hw = MatrixXd::Zero(c.dim(), c.dim());
  std::vector<WeightedTerm> weighted;
  for (const auto& [key, w] : out.weights) {
    const auto& term = refined.terms[static_cast<std::size_t>(key.first)][static_cast<std::size_t>(key.second)];
    hw.noalias() += (w * term.weight) * term.vector * term.vector.transpose();
    weighted.push_back({w, term});
  }
  out.h_w = SymMatrix::symmetrize(hw);
  out.chi = weighted.empty() ? 0.0 : chi_infimum(weighted);
  sel.elapsed = seconds_since(start);
  return out;
}

SelectionResult greedy_select(const CandidateSet& c, int q, Measure measure, Exec exec) {
  if (q < 0) throw Error(ErrorKind::kInvalidInput, "budget q must be >= 0");
  const auto start = Clock::now();
  SymMatrix h = c.prior.h;
  std::vector<char> taken(static_cast<std::size_t>(c.size()), 0);
  std::vector<int> indices;
  const int rounds = std::min(q, c.size());
  for (int k = 0; k < rounds; ++k) {
    const auto pick = exec.workers <= 1 ? kernels::serial::greedy_scan(c, h, taken, measure)
                                        : kernels::omp::greedy_scan(c, h, taken, measure, exec.workers);
    taken[static_cast<std::size_t>(pick.index)] = 1;
    indices.push_back(pick.index);
    h += c.contributions[static_cast<std::size_t>(pick.index)].hf;
  }
  std::sort(indices.begin(), indices.end());
  SelectionResult r;
  r.method = Method::kGreedy;
  r.indices = indices;
  r.ids = ids_of(c, indices);
  r.h = std::move(h);
  r.measure = evaluate_measure(measure, r.h);
  r.elapsed = seconds_since(start);
  return r;
}

SelectionResult uniform_select(const CandidateSet& c, int q, std::uint64_t seed, Measure measure) {
  auto r = sample_subset(c, uniform_scores(c), q, seed, measure);
  r.method = Method::kUniform;
  return r;
}

namespace {

SelectionResult restarts_with(const CandidateSet& c, const ScoreTable& scores, Method method, int q,
                              Measure measure, int restarts, std::uint64_t seed, Exec exec) {
  if (restarts < 1) throw Error(ErrorKind::kInvalidInput, "restarts must be >= 1");
  if (q < 0) throw Error(ErrorKind::kInvalidInput, "budget q must be >= 0");
  std::vector<kernels::RestartOutcome> outcomes;
  const int best = exec.workers <= 1
                       ? kernels::serial::best_restart(c, scores.pi, q, measure, restarts, seed, outcomes)
                       : kernels::omp::best_restart(c, scores.pi, q, measure, restarts, seed, outcomes,
                                                    exec.workers);
  return from_outcome(c, method, std::move(outcomes[static_cast<std::size_t>(best)]), best);
}

}  // namespace

SelectionResult best_of_restarts(const CandidateSet& c, int q, Measure measure, int restarts,
                                 std::uint64_t seed, Exec exec) {
  const auto start = Clock::now();
  const ScoreTable scores = leverage_scores(c, exec);
  auto r = restarts_with(c, scores, Method::kLeverage, q, measure, restarts, seed, exec);
  r.elapsed = seconds_since(start);
  return r;
}

SelectionResult best_of_uniform_restarts(const CandidateSet& c, int q, Measure measure, int restarts,
                                         std::uint64_t seed, Exec exec) {
  const auto start = Clock::now();
  const ScoreTable scores = uniform_scores(c);
  auto r = restarts_with(c, scores, Method::kUniform, q, measure, restarts, seed, exec);
  r.elapsed = seconds_since(start);
  return r;
}

SelectionResult run_method(Method method, const CandidateSet& c, int q, Measure measure, int restarts,
                           std::uint64_t seed, Exec exec) {
  switch (method) {
    case Method::kLeverage: return best_of_restarts(c, q, measure, restarts, seed, exec);
    case Method::kUniform: return best_of_uniform_restarts(c, q, measure, restarts, seed, exec);
    case Method::kGreedy: return greedy_select(c, q, measure, exec);
  }
  throw Error(ErrorKind::kInvalidInput, "unknown method");
}

int default_budget(int n_candidates) { return (n_candidates + 1) / 2; }

Certificate certify_bounds(const CandidateSet& c, const SymMatrix& h_selected, double eps, double chi_bar) {
  if (!(eps > 0.0 && eps < 1.0)) throw Error(ErrorKind::kInvalidInput, "eps must lie in (0, 1)");
  if (!(chi_bar > 0.0)) throw Error(ErrorKind::kInvalidInput, "chi_bar must be > 0");
  const SymMatrix h_theta = maximal_information(c);
  const double n = static_cast<double>(c.dim());
  const double ratio = 4.0 * chi_bar / (1.0 - eps);
  const auto le = [](double lhs, double rhs) { return lhs <= rhs + 1e-9 * std::max(1.0, std::abs(rhs)); };

  Certificate cert;
  cert.factor = 1.0 / ratio;
  cert.loewner = loewner_geq(h_selected, cert.factor * h_theta);

  const double v_phi = evaluate_measure(Measure::kVariance, h_selected);
  const double v_theta = evaluate_measure(Measure::kVariance, h_theta);
  const double e_phi = evaluate_measure(Measure::kEntropy, h_selected);
  const double e_theta = evaluate_measure(Measure::kEntropy, h_theta);
  const double l_phi = evaluate_measure(Measure::kSpectral, h_selected);
  const double l_theta = evaluate_measure(Measure::kSpectral, h_theta);

  cert.loss_v = (v_phi - v_theta) / v_theta;
  cert.bound_v = ratio - 1.0;
  cert.loss_e = e_phi - e_theta;
  cert.bound_e = n * std::log(ratio);
  cert.loss_lambda = (l_phi - l_theta) / l_theta;
  cert.bound_lambda = ratio - 1.0;
  cert.pass_v = le(cert.loss_v, cert.bound_v);
  cert.pass_e = le(cert.loss_e, cert.bound_e);
  cert.pass_lambda = le(cert.loss_lambda, cert.bound_lambda);

  cert.literal_v = le((v_theta - v_phi) / v_phi, ratio - 1.0);
  cert.literal_e = le(e_theta - e_phi, n * std::log(ratio));
  cert.literal_lambda = le((l_theta - l_phi) / l_phi, ratio - 1.0);
  return cert;
}

CertificationReport certify(const CandidateSet& c, int q, double eps, int seeds, std::uint64_t master_seed) {
  if (seeds < 1) throw Error(ErrorKind::kInvalidInput, "need at least one seed");
  CertificationReport rep;
  rep.q = q;
  rep.eps = eps;
  const double n = static_cast<double>(c.dim());
  rep.n_log_n_over_eps2 = n * std::log(n) / (eps * eps);

  const ScoreTable scores = leverage_scores(c);
  const RefinedScores refined = refined_scores(c);
  std::vector<SymMatrix> selected;
  for (int s = 0; s < seeds; ++s) {
    auto a = sample_subset_analysis(c, scores, refined, q, derive_seed(master_seed, "certify", s));
    rep.chi.push_back(a.chi);
    selected.push_back(std::move(a.selection.h));
  }
  const double mean = std::accumulate(rep.chi.begin(), rep.chi.end(), 0.0) / seeds;
  double var = 0.0;
  for (double x : rep.chi) var += (x - mean) * (x - mean);
  rep.chi_bar = mean;
  rep.chi_stderr = seeds > 1 ? std::sqrt(var / (seeds - 1) / seeds) : 0.0;

  int passes = 0;
  for (const auto& h : selected) {
    auto cert = certify_bounds(c, h, eps, rep.chi_bar);
    if (cert.loewner) {
      ++passes;
      if (!cert.measures_pass()) rep.implication_holds = false;
    }
    rep.runs.push_back(cert);
  }
  rep.pass_rate = static_cast<double>(passes) / seeds;
  rep.full_set = certify_bounds(c, maximal_information(c), eps, rep.chi_bar);
  return rep;
}

}  // namespace fsel
