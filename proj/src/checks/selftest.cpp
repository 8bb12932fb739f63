#include "fsel/checks/selftest.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <sstream>

#include "fsel/checks/oracles.hpp"
#include "fsel/estimator.hpp"
#include "fsel/simenv.hpp"

namespace fsel::checks {

namespace {

// A check returns its worst observed error against the tolerance it declares.
struct Outcome {
  double error = 0.0;
  double tol = 0.0;
  std::string note;
};

struct Check {
  const char* module;
  const char* name;
  std::function<Outcome(Rng&)> run;
};

double rel(const MatrixXd& a, const MatrixXd& b) { return (a - b).norm() / std::max(1.0, b.norm()); }

std::vector<Check> registry() {
  std::vector<Check> c;

  c.push_back({"numerics", "gram_matrices_are_psd", [](Rng& rng) {
                 double worst = 0.0;
                 for (int k = 0; k < 20; ++k) {
                   const MatrixXd a = random_matrix(rng, 6, 4);
                   const SymMatrix g = SymMatrix::symmetrize(a * a.transpose());
                   const double lmin = Eigen::SelfAdjointEigenSolver<MatrixXd>(g.mat()).eigenvalues()(0);
                   if (!psd_check(g, 1e-10 * std::max(1.0, g.trace()))) worst = std::max(worst, -lmin);
                 }
                 return Outcome{worst, 0.0, {}};
               }});
  c.push_back({"numerics", "logdet_matches_spectrum", [](Rng& rng) {
                 double worst = 0.0;
                 for (int k = 0; k < 20; ++k) {
                   const MatrixXd m = random_spd(rng, 5);
                   const double oracle = -measure_from_spectrum(Measure::kEntropy, m);
                   worst = std::max(worst, std::abs(logdet(SymMatrix(m)) - oracle));
                 }
                 return Outcome{worst, 1e-8, {}};
               }});
  c.push_back({"numerics", "min_eig_matches_spectrum", [](Rng& rng) {
                 double worst = 0.0;
                 for (int k = 0; k < 20; ++k) {
                   const MatrixXd a = random_matrix(rng, 7, 7);
                   const MatrixXd s = 0.5 * (a + a.transpose());
                   const Eigen::EigenSolver<MatrixXd> full(s);
                   const double oracle = full.eigenvalues().real().minCoeff();
                   worst = std::max(worst, std::abs(min_eig(SymMatrix(s)) - oracle) / std::max(1.0, std::abs(oracle)));
                 }
                 return Outcome{worst, 1e-8, {}};
               }});
  c.push_back({"numerics", "rank_one_split_reassembles", [](Rng& rng) {
                 double worst = 0.0;
                 for (int k = 0; k < 20; ++k) {
                   const MatrixXd a = random_matrix(rng, 8, 5);
                   const SymMatrix m = SymMatrix::symmetrize(a * a.transpose());
                   const auto terms = rank_one_split(m);
                   const double err = (reassemble(terms, 8).mat() - m.mat()).norm() / (1.0 + m.mat().norm());
                   worst = std::max(worst, err);
                 }
                 return Outcome{worst, 1e-8, {}};
               }});
  c.push_back({"numerics", "chi_matches_grid_oracle", [](Rng& rng) {
                 double worst = 0.0;
                 std::uniform_real_distribution<double> w(0.1, 3.0);
                 for (int k = 0; k < 5; ++k) {
                   const MatrixXd q = random_orthogonal(rng, 4);
                   const MatrixXd q2 = random_orthogonal(rng, 4);
                   std::vector<WeightedTerm> terms;
                   for (int i = 0; i < 4; ++i) terms.push_back({w(rng), {q.col(i), w(rng)}});
                   for (int i = 0; i < 2; ++i) terms.push_back({w(rng), {q2.col(i), w(rng)}});
                   const double grid = chi_grid_oracle(terms, 4000);
                   double wmax = 0.0;
                   for (const auto& t : terms) wmax = std::max(wmax, t.weight);
                   // Grid spacing is wmax / 4000.
                   worst = std::max(worst, std::abs(chi_infimum(terms) - grid) / (wmax / 4000.0));
                 }
                 return Outcome{worst, 1.0 + 1e-6, {}};
               }});

  c.push_back({"motion", "finite_difference_jacobian", [](Rng& rng) {
                 DynamicsSpec spec;
                 spec.g = [](const Vector3d& x, const Vector3d& u) -> Vector3d {
                   return {std::sin(x(0)) + u(0), x(0) * x(1) + u(1), std::exp(0.1 * x(2)) + x(1) * u(2)};
                 };
                 spec.h = [](const Vector3d& r, const Vector3d& mu) -> Vector3d { return r - 0.5 * mu; };
                 spec.process_noise = [](int) { return Matrix3d::Identity(); };
                 double worst = 0.0;
                 for (int k = 0; k < 10; ++k) {
                   const Vector3d m = random_matrix(rng, 3, 1);
                   const Vector3d r = random_matrix(rng, 3, 1);
                   const auto lin = linearize(spec, m, r);
                   const Vector3d u = spec.h(r, m);
                   const Matrix3d oracle =
                       central_difference([&](const Vector3d& x) { return spec.g(x, u); }, m, 1e-6);
                   worst = std::max(worst, (lin.a - oracle).cwiseAbs().maxCoeff());
                 }
                 return Outcome{worst, 1e-5, {}};
               }});
  c.push_back({"motion", "standard_cross_covariance_monte_carlo", [](Rng& rng) {
                 std::vector<Matrix3d> a;
                 for (int k = 0; k < 3; ++k) a.push_back(0.9 * Matrix3d::Identity() + 0.15 * random_matrix(rng, 3, 3));
                 const Matrix3d lambda = random_spd(rng, 3, 0.5, 2.0);
                 const Matrix3d sigma0 = random_spd(rng, 3, 0.5, 2.0);
                 std::size_t step = 0;
                 DynamicsSpec spec;
                 spec.g = [&](const Vector3d& x, const Vector3d& u) -> Vector3d { return a[step] * x + u; };
                 spec.h = [](const Vector3d& r, const Vector3d&) -> Vector3d { return r; };
                 spec.jacobian = [&](const Vector3d&, const Vector3d&, const Vector3d&) -> Matrix3d {
                   return a[step++];
                 };
                 spec.mode = JacobianMode::kAnalytic;
                 spec.process_noise = [lambda](int) { return lambda; };
                 const auto belief =
                     propagate_prior(spec, Vector3d::Zero(), sigma0, std::vector<Vector3d>(3, Vector3d::Zero()), 0).first;
                 const MatrixXd emp = monte_carlo_covariance(a, lambda, sigma0, 1000000, rng());
                 const MatrixXd& cov = belief.cov.mat();
                 double worst = 0.0;
                 for (Eigen::Index i = 0; i < cov.rows(); ++i) {
                   for (Eigen::Index j = 0; j < cov.cols(); ++j) {
                     const double scale = std::sqrt(cov(i, i) * cov(j, j));
                     worst = std::max(worst, std::abs(emp(i, j) - cov(i, j)) / scale);
                   }
                 }
                 return Outcome{worst, 0.02, {}};
               }});
  c.push_back({"motion", "information_round_trip", [](Rng& rng) {
                 double worst = 0.0;
                 for (int k = 0; k < 10; ++k) {
                   GaussianBelief b{random_matrix(rng, 63, 1), SymMatrix(random_spd(rng, 63))};
                   const auto back = from_information(to_information(b));
                   worst = std::max({worst, rel(back.mean, b.mean), rel(back.cov.mat(), b.cov.mat())});
                 }
                 return Outcome{worst, 1e-8, {}};
               }});

  c.push_back({"vision", "skew_is_cross_product", [](Rng& rng) {
                 double worst = 0.0;
                 for (int k = 0; k < 50; ++k) {
                   const Vector3d u = random_matrix(rng, 3, 1);
                   const Vector3d v = random_matrix(rng, 3, 1);
                   worst = std::max(worst, (skew(u) * v - cross_components(u, v)).norm());
                 }
                 return Outcome{worst, 1e-12, {}};
               }});
  c.push_back({"vision", "euler_zyx_orthogonal", [](Rng& rng) {
                 std::uniform_real_distribution<double> ang(-4.0, 4.0);
                 double worst = 0.0;
                 for (int k = 0; k < 50; ++k) {
                   const Matrix3d r = euler_zyx(ang(rng), ang(rng), ang(rng));
                   worst = std::max({worst, (r.transpose() * r - Matrix3d::Identity()).cwiseAbs().maxCoeff(),
                                     std::abs(r.determinant() - 1.0)});
                 }
                 return Outcome{worst, 1e-12, {}};
               }});
  c.push_back({"vision", "marginal_information_schur_oracle", [](Rng& rng) {
                 double worst = 0.0;
                 for (int k = 0; k < 10; ++k) {
                   const std::vector<int> frames{0, 2};
                   const std::vector<Matrix3d> rows{skew(random_unit(rng)) * random_rotation(rng).transpose(),
                                                    skew(random_unit(rng)) * random_rotation(rng).transpose()};
                   const auto c = assemble_contribution(0, 2, frames, rows, 0.3);
                   const MatrixXd oracle = marginal_information_oracle(c.f, c.e, 0.3);
                   worst = std::max(worst, rel(c.hf.mat(), oracle));
                 }
                 return Outcome{worst, 1e-8, {}};
               }});
  c.push_back({"vision", "single_frame_not_triangulable", [](Rng& rng) {
                 double bad = 0.0;
                 for (int k = 0; k < 20; ++k) {
                   const std::vector<int> frames{1};
                   const std::vector<Matrix3d> rows{skew(random_unit(rng)) * random_rotation(rng).transpose()};
                   const auto c = assemble_contribution(0, 3, frames, rows, 0.1);
                   Eigen::FullPivLU<Matrix3d> lu(c.e.transpose() * c.e);
                   lu.setThreshold(1e-10);
                   if (c.triangulable || lu.rank() > 2) bad += 1.0;
                 }
                 return Outcome{bad, 0.0, {}};
               }});
  c.push_back({"vision", "contribution_is_psd", [](Rng& rng) {
                 InstanceOptions o;
                 o.features = 20;
                 o.horizon = 4;
                 const auto inst = random_instance(rng, o);
                 double worst = 0.0;
                 for (const auto& f : inst.set.contributions) worst = std::max(worst, -min_eig(f.hf) / (1.0 + f.hf.trace()));
                 return Outcome{std::max(worst, 0.0), 1e-12, {}};
               }});

  c.push_back({"selection", "probabilities_sum_to_one", [](Rng& rng) {
                 double worst = 0.0;
                 for (int k = 0; k < 20; ++k) {
                   InstanceOptions o;
                   o.features = 5 + k;
                   o.horizon = 1 + k % 4;
                   const auto inst = random_instance(rng, o);
                   worst = std::max(worst, std::abs(leverage_scores(inst.set).pi.sum() - 1.0));
                 }
                 return Outcome{worst, 1e-10, {}};
               }});
  c.push_back({"selection", "leverage_scores_solve_then_trace", [](Rng& rng) {
                 InstanceOptions o;
                 o.features = 3;
                 o.horizon = 3;
                 const auto inst = random_instance(rng, o);
                 const auto scores = leverage_scores(inst.set);
                 MatrixXd h_theta = inst.set.prior.h.mat();
                 for (const auto& f : inst.set.contributions) h_theta += f.hf.mat();
                 double worst = 0.0;
                 for (int f = 0; f < 3; ++f) {
                   const MatrixXd aug = inst.set.prior.h.mat() / 3.0 + inst.set.contributions[static_cast<std::size_t>(f)].hf.mat();
                   const double oracle = h_theta.fullPivLu().solve(aug).trace();
                   worst = std::max(worst, std::abs(scores.r(f) - oracle) / std::max(1.0, oracle));
                 }
                 return Outcome{worst, 1e-10, {}};
               }});
  c.push_back({"selection", "refined_scores_sum_to_coarse", [](Rng& rng) {
                 InstanceOptions o;
                 o.features = 8;
                 o.horizon = 3;
                 const auto inst = random_instance(rng, o);
                 const auto scores = leverage_scores(inst.set);
                 const auto refined = refined_scores(inst.set);
                 double worst = 0.0;
                 for (int f = 0; f < inst.set.size(); ++f) {
                   worst = std::max(worst, std::abs(refined.pi_feature[static_cast<std::size_t>(f)] - scores.pi(f)));
                 }
                 return Outcome{worst, 1e-10, {}};
               }});
  c.push_back({"selection", "sampling_frequencies_match_pi", [](Rng& rng) {
                 InstanceOptions o;
                 o.features = 6;
                 o.horizon = 2;
                 const auto inst = random_instance(rng, o);
                 const auto scores = leverage_scores(inst.set);
                 std::discrete_distribution<int> draw(scores.pi.data(), scores.pi.data() + scores.pi.size());
                 Rng sampler(rng());
                 const int draws = 100000;
                 VectorXd counts = VectorXd::Zero(inst.set.size());
                 for (int k = 0; k < draws; ++k) counts(draw(sampler)) += 1.0;
                 double worst = 0.0;
                 for (int f = 0; f < inst.set.size(); ++f) {
                   const double p = scores.pi(f);
                   const double se = std::sqrt(p * (1.0 - p) / draws);
                   worst = std::max(worst, std::abs(counts(f) / draws - p) / se);
                 }
                 return Outcome{worst, 3.0, {}};
               }});
  c.push_back({"selection", "measures_match_spectrum", [](Rng& rng) {
                 double worst = 0.0;
                 for (int k = 0; k < 10; ++k) {
                   const MatrixXd h = random_spd(rng, 9);
                   for (Measure m : {Measure::kVariance, Measure::kEntropy, Measure::kSpectral}) {
                     const double oracle = measure_from_spectrum(m, h);
                     worst = std::max(worst, std::abs(evaluate_measure(m, SymMatrix(h)) - oracle) /
                                                 std::max(1.0, std::abs(oracle)));
                   }
                 }
                 return Outcome{worst, 1e-8, {}};
               }});
  c.push_back({"selection", "greedy_not_better_than_brute_force", [](Rng& rng) {
                 InstanceOptions o;
                 o.features = 10;
                 o.horizon = 2;
                 const auto inst = random_instance(rng, o);
                 const auto bf = brute_force_best(inst.set, 3, Measure::kVariance);
                 const auto g = greedy_select(inst.set, 3, Measure::kVariance);
                 // greedy >= optimum; error is how far below the optimum greedy claims to be.
                 return Outcome{std::max(0.0, (bf.value - g.measure) / bf.value), 1e-10,
                                "gap " + std::to_string((g.measure - bf.value) / bf.value)};
               }});

  c.push_back({"estimator", "fusion_matches_normal_equations", [](Rng& rng) {
                 double worst = 0.0;
                 for (int k = 0; k < 10; ++k) {
                   InstanceOptions o;
                   o.features = 4;
                   o.horizon = 2;
                   const auto inst = random_instance(rng, o);
                   std::vector<const FeatureContribution*> sel;
                   std::vector<VectorXd> zs;
                   for (const auto& f : inst.set.contributions) {
                     sel.push_back(&f);
                     zs.push_back(random_matrix(rng, f.f.rows(), 1));
                   }
                   const auto post = fuse(inst.set.prior, sel, zs);
                   const auto oracle = normal_equations_posterior(inst.prior, sel, zs, inst.sigma);
                   worst = std::max({worst, rel(post.belief.mean, oracle.mean), rel(post.belief.cov.mat(), oracle.cov)});
                 }
                 return Outcome{worst, 1e-6, {}};
               }});
  c.push_back({"estimator", "noiseless_recovery", [](Rng&) {
                 ScenarioConfig cfg = ScenarioConfig::desk_scale();
                 cfg.horizon = 5;
                 cfg.landmarks = 200;
                 cfg.sigma = 1e-8;
                 cfg.process_noise.setZero();
                 cfg.model_noise_floor = 1e-6;
                 cfg.sample_initial_truth = false;
                 const auto landmarks = generate_landmarks(cfg, cfg.seed);
                 HorizonOptions opts;
                 opts.select_all = true;
                 HorizonStart start = initial_start(cfg);
                 double worst = 0.0;
                 for (int h = 0; h < 3; ++h) {
                   start.index = h;
                   const auto rec = run_horizon(cfg, landmarks, start, opts);
                   const auto means = frame_means(rec.outcomes[0].posterior.belief.mean);
                   for (std::size_t k = 0; k < means.size(); ++k) worst = std::max(worst, (means[k] - rec.truth[k]).norm());
                   start = rec.next;
                 }
                 return Outcome{worst, 1e-4, {}};
               }});

  c.push_back({"simenv", "rmse_direct_formula", [](Rng& rng) {
                 double worst = 0.0;
                 for (int k = 0; k < 10; ++k) {
                   std::vector<Vector3d> a, b;
                   double sum = 0.0;
                   for (int i = 0; i < 6; ++i) {
                     a.emplace_back(random_matrix(rng, 3, 1));
                     b.emplace_back(random_matrix(rng, 3, 1));
                     for (int j = 0; j < 3; ++j) sum += (a.back()(j) - b.back()(j)) * (a.back()(j) - b.back()(j));
                   }
                   worst = std::max(worst, std::abs(rmse(a, b) - std::sqrt(sum) / 18.0));
                 }
                 return Outcome{worst, 1e-12, {}};
               }});
  c.push_back({"simenv", "path_period", [](Rng&) {
                 const ScenarioConfig cfg;
                 const double period = 4.0 * std::numbers::pi / cfg.omega;
                 double worst = 0.0;
                 for (double tau : {0.0, 3.7, 11.0, 40.5}) {
                   worst = std::max(worst, (reference_path(cfg, tau + period) - reference_path(cfg, tau)).norm() / cfg.radius);
                 }
                 return Outcome{worst, 1e-9, {}};
               }});
  c.push_back({"simenv", "landmarks_within_bands", [](Rng&) {
                 const ScenarioConfig cfg;
                 double bad = 0.0;
                 for (const auto& f : generate_landmarks(cfg, 99)) {
                   const double r = std::hypot(f.y.x() - cfg.p0, f.y.y());
                   if (r < cfg.landmark_inner * cfg.radius || r > cfg.landmark_outer * cfg.radius ||
                       std::abs(f.y.z()) > cfg.landmark_height * cfg.radius) {
                     bad += 1.0;
                   }
                 }
                 return Outcome{bad, 0.0, {}};
               }});
  return c;
}

}  // namespace

std::vector<std::string> selftest_names() {
  std::vector<std::string> out;
  for (const auto& c : registry()) out.push_back(std::string(c.module) + "." + c.name);
  return out;
}

std::vector<CheckResult> run_selftest(const SelftestOptions& opts) {
  std::vector<CheckResult> out;
  for (const auto& c : registry()) {
    const std::string full = std::string(c.module) + "." + c.name;
    Rng rng(derive_seed(opts.seed, full));
    CheckResult r{c.module, c.name, false, {}};
    try {
      Outcome o = c.run(rng);
      if (full == opts.inject || c.name == opts.inject) o.tol = -1.0;
      r.passed = o.error <= o.tol;
      std::ostringstream ss;
      ss << "error " << o.error << " tol " << o.tol;
      if (!o.note.empty()) ss << " (" << o.note << ")";
      r.detail = ss.str();
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = e.what();
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace fsel::checks
