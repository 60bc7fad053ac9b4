// Acceptance suite: one pass/fail line per criterion. Exit code equals the
// number of failed criteria. A criterion whose required input is absent
// (the banknote CSV) reports SKIP and does not fail the run.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "mcpl/baselines.hpp"
#include "mcpl/dataset.hpp"
#include "mcpl/errors.hpp"
#include "mcpl/harness.hpp"
#include "mcpl/lda.hpp"
#include "mcpl/rng.hpp"
#include "mcpl/solver.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

namespace fs = std::filesystem;
using namespace mcpl;

namespace {

struct Outcome {
  bool passed = false;
  bool skipped = false;
  std::string detail;
};

Outcome pass(std::string detail) { return {true, false, std::move(detail)}; }
Outcome fail(std::string detail) { return {false, false, std::move(detail)}; }
Outcome skip(std::string detail) { return {false, true, std::move(detail)}; }

double elapsed_s(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

LabeledDataset training_union(const LabeledDataset& labeled,
                              const UnlabeledSet& unlabeled) {
  LabeledDataset full = labeled;
  const int n = labeled.size();
  const int m = unlabeled.size();
  full.features.conservativeResize(n + m, labeled.dim());
  full.features.bottomRows(m) = unlabeled.features;
  const auto& oracle = *unlabeled.oracle_labels;
  full.labels.insert(full.labels.end(), oracle.begin(), oracle.end());
  return full;
}

// --- criterion 1: worst-case gain bound and almost-sure strict improvement

Outcome criterion_gain_and_strict_improvement() {
  const auto start = std::chrono::steady_clock::now();
  const int dims[] = {1, 2, 5};
  const int classes[] = {2, 3};
  const int unlabeled_counts[] = {1, 10, 100};
  Rng rng(0xC1);
  const int trials = 500;
  int gain_ok = 0, strict = 0, done = 0;
  while (done < trials) {
    const int d = dims[done % 3];
    const int k = classes[(done / 3) % 2];
    const int m = unlabeled_counts[(done / 6) % 3];
    const auto p =
        testutil::make_gaussian_problem(rng, d, k, 2 * d + k, m);
    LdaModel sup;
    try {
      sup = fit_supervised(p.labeled);
    } catch (const IllPosedError&) {
      continue; // the guarantee presumes a well-posed supervised fit
    }
    ++done;
    const SolveResult r = solve(p.labeled, p.unlabeled, sup);
    if (r.gain >= -1e-8) ++gain_ok;
    const LabeledDataset full = training_union(p.labeled, p.unlabeled);
    if (log_likelihood(r.model, full, false) >
        log_likelihood(sup, full, false))
      ++strict;
  }
  const double secs = elapsed_s(start);
  std::ostringstream detail;
  detail << "gain >= -1e-8 in " << gain_ok << "/" << trials
         << ", strict training improvement in " << strict << "/" << trials
         << " (" << secs << " s)";
  if (gain_ok == trials && strict >= trials * 99 / 100 && secs <= 300.0)
    return pass(detail.str());
  return fail(detail.str());
}

// --- criterion 2: grid-search saddle oracle on the 1-d toy

Outcome criterion_toy_saddle_oracle() {
  LabeledDataset labeled;
  labeled.features.resize(4, 1);
  labeled.features << 0.0, 2.0, 4.0, 6.0;
  labeled.labels = {1, 1, 2, 2};
  labeled.class_count = 2;
  UnlabeledSet unlabeled;
  unlabeled.features.resize(3, 1);
  unlabeled.features << 1.0, 3.0, 5.0;
  const LdaModel sup = fit_supervised(labeled);

  const SolveResult r = solve(labeled, unlabeled, sup);
  if (!r.converged) return fail("solver did not converge on the toy");

  auto gain_at = [&](double mu1, double mu2, double var, double pi1) {
    LdaModel m;
    m.priors = Eigen::Vector2d(pi1, 1.0 - pi1);
    m.means.resize(2, 1);
    m.means << mu1, mu2;
    m.covariance = Eigen::MatrixXd::Constant(1, 1, var);
    return pessimistic_gain(m, sup, labeled, unlabeled).value;
  };
  double best = -1e300;
  Eigen::Vector4d at(1.0, 5.0, 1.0, 0.5), width(2.5, 2.5, 1.8, 0.45);
  for (int stage = 0; stage < 3; ++stage) {
    Eigen::Vector4d stage_best = at;
    const int steps = 14;
    for (int a = -steps; a <= steps; ++a)
      for (int b = -steps; b <= steps; ++b)
        for (int c = -steps; c <= steps; ++c)
          for (int e = -steps; e <= steps; ++e) {
            const double mu1 = at(0) + width(0) * a / steps;
            const double mu2 = at(1) + width(1) * b / steps;
            const double var = at(2) + width(2) * c / steps;
            const double pi1 = at(3) + width(3) * e / steps;
            if (var < 0.05 || pi1 < 0.02 || pi1 > 0.98) continue;
            const double g = gain_at(mu1, mu2, var, pi1);
            if (g > best) {
              best = g;
              stage_best << mu1, mu2, var, pi1;
            }
          }
    at = stage_best;
    width /= steps * 0.5;
  }

  const double rel = std::abs(r.gain - best) / std::abs(best);
  if (rel > 1e-2) {
    return fail("solver gain " + std::to_string(r.gain) +
                " vs grid oracle " + std::to_string(best));
  }

  // First-order saddle conditions at convergence.
  const LdaModel refit = fit_weighted(labeled, unlabeled, r.q);
  const double theta_gap = std::max(
      {(refit.priors - r.model.priors).cwiseAbs().maxCoeff(),
       (refit.means - r.model.means).cwiseAbs().maxCoeff(),
       (refit.covariance - r.model.covariance).cwiseAbs().maxCoeff()});
  if (theta_gap > 1e-8)
    return fail("theta refit gap " + std::to_string(theta_gap));

  const Eigen::MatrixXd grad = q_gradient(r.model, sup, unlabeled);
  for (int i = 0; i < grad.rows(); ++i) {
    const double row_min = grad.row(i).minCoeff();
    for (int c = 0; c < grad.cols(); ++c) {
      if (r.q.weights(i, c) > 1e-9 && grad(i, c) - row_min > 1e-6)
        return fail("q support off the per-point argmin at point " +
                    std::to_string(i));
    }
  }
  std::ostringstream detail;
  detail << "solver gain " << r.gain << ", grid oracle " << best
         << ", rel gap " << rel << ", theta refit gap " << theta_gap;
  return pass(detail.str());
}

// --- criterion 3: gradient versus central finite differences

Outcome criterion_gradient_finite_differences() {
  Rng rng(0xC3);
  double max_rel = 0.0;
  int points = 0;
  while (points < 50) {
    const int d = 1 + static_cast<int>(rng.uniform_below(3));
    const int k = 2 + static_cast<int>(rng.uniform_below(2));
    const int m = 1 + static_cast<int>(rng.uniform_below(4));
    const auto p =
        testutil::make_gaussian_problem(rng, d, k, 2 * d + 2 * k, m);
    LdaModel sup;
    try {
      sup = fit_supervised(p.labeled);
    } catch (const IllPosedError&) {
      continue;
    }
    SoftLabels q0;
    q0.weights.resize(m, k);
    for (int i = 0; i < m; ++i)
      q0.weights.row(i) = testutil::random_interior_simplex(rng, k).transpose();
    const LdaModel theta = fit_weighted(p.labeled, p.unlabeled, q0);
    ++points;

    Eigen::MatrixXd w(m, k);
    for (int i = 0; i < m; ++i)
      w.row(i) = testutil::random_interior_simplex(rng, k).transpose();
    const Eigen::MatrixXd grad = q_gradient(theta, sup, p.unlabeled);
    const double h = 1e-6;
    for (int i = 0; i < m; ++i) {
      for (int c = 0; c < k; ++c) {
        Eigen::MatrixXd wp = w, wm = w;
        wp(i, c) += h;
        wm(i, c) -= h;
        const double fd =
            (contrastive_likelihood(theta, sup, p.labeled, p.unlabeled, wp) -
             contrastive_likelihood(theta, sup, p.labeled, p.unlabeled, wm)) /
            (2.0 * h);
        max_rel = std::max(max_rel, std::abs(fd - grad(i, c)) /
                                        std::max(1.0, std::abs(grad(i, c))));
      }
    }
  }
  std::ostringstream detail;
  detail << "max relative error " << max_rel << " over 50 interior points";
  return max_rel < 1e-6 ? pass(detail.str()) : fail(detail.str());
}

// --- criterion 4: closed-form fits against a generic numeric maximizer

Outcome criterion_estimator_optimality() {
  Rng rng(0xC4);
  double worst_slack = 0.0, worst_mean_residual = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + static_cast<int>(rng.uniform_below(3));
    const int k = 2 + static_cast<int>(rng.uniform_below(2));
    const bool weighted = trial % 2 == 1;
    const int m = weighted ? 1 + static_cast<int>(rng.uniform_below(5)) : 0;
    const auto p =
        testutil::make_gaussian_problem(rng, d, k, 2 * d + 2 * k, m);

    Eigen::MatrixXd w(m, k);
    for (int i = 0; i < m; ++i)
      w.row(i) = testutil::random_interior_simplex(rng, k).transpose();

    LdaModel fit;
    double fit_ll;
    if (!weighted) {
      fit = fit_supervised(p.labeled);
      fit_ll = oracle::log_likelihood(fit, p.labeled);
    } else {
      SoftLabels q;
      q.weights = w;
      fit = fit_weighted(p.labeled, p.unlabeled, q);
      fit_ll = oracle::weighted_log_likelihood(fit, p.labeled,
                                               p.unlabeled.features, w);

      const Eigen::VectorXd mix = fit.means.transpose() * fit.priors;
      const Eigen::VectorXd all_mean =
          (p.labeled.features.colwise().sum() +
           p.unlabeled.features.colwise().sum())
              .transpose() /
          (p.labeled.size() + p.unlabeled.size());
      worst_mean_residual = std::max(worst_mean_residual,
                                     (mix - all_mean).cwiseAbs().maxCoeff());
    }
    const double numeric = oracle::numeric_max_loglik(
        p.labeled, p.unlabeled.features, w, fit, 2,
        0xC4000 + static_cast<std::uint64_t>(trial));
    worst_slack = std::max(worst_slack, numeric - fit_ll);
  }
  std::ostringstream detail;
  detail << "worst numeric-minus-closed-form slack " << worst_slack
         << ", worst mean-constraint residual " << worst_mean_residual;
  return worst_slack <= 1e-6 && worst_mean_residual <= 1e-10
             ? pass(detail.str())
             : fail(detail.str());
}

// --- criterion 5: simplex projection against the QP oracle

Outcome criterion_projection_oracle() {
  Rng rng(0xC5);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 2 + static_cast<int>(rng.uniform_below(9));
    Eigen::VectorXd v(k);
    for (int i = 0; i < k; ++i) v(i) = 8.0 * (rng.next_double() - 0.5);
    const Eigen::VectorXd got = project_simplex(v);
    const Eigen::VectorXd expected = oracle::project_simplex_qp(v);
    worst = std::max(worst, (got - expected).cwiseAbs().maxCoeff());
  }
  std::ostringstream detail;
  detail << "max deviation from QP oracle " << worst << " over 1000 vectors";
  return worst <= 1e-10 ? pass(detail.str()) : fail(detail.str());
}

// --- criterion 6: exact inner minimum against exhaustive enumeration

Outcome criterion_inner_min_oracle() {
  Rng rng(0xC6);
  double worst = 0.0;
  int done = 0;
  while (done < 100) {
    const int d = 1 + static_cast<int>(rng.uniform_below(2));
    const int k = 2 + static_cast<int>(rng.uniform_below(2));
    const int m = 1 + static_cast<int>(rng.uniform_below(6));
    const auto p =
        testutil::make_gaussian_problem(rng, d, k, 2 * d + 2 * k, m);
    LdaModel sup;
    try {
      sup = fit_supervised(p.labeled);
    } catch (const IllPosedError&) {
      continue;
    }
    SoftLabels q;
    q.weights.resize(m, k);
    for (int i = 0; i < m; ++i)
      q.weights.row(i) = testutil::random_interior_simplex(rng, k).transpose();
    const LdaModel theta = fit_weighted(p.labeled, p.unlabeled, q);
    ++done;

    const double got =
        pessimistic_gain(theta, sup, p.labeled, p.unlabeled).value;
    const double brute = oracle::min_contrast_over_labelings(
        theta, sup, p.labeled, p.unlabeled.features);
    worst = std::max(worst, std::abs(got - brute));
  }
  std::ostringstream detail;
  detail << "max gap to exhaustive enumeration " << worst
         << " over 100 instances";
  return worst <= 1e-10 ? pass(detail.str()) : fail(detail.str());
}

// --- criterion 7: desk-scale banknote replication (skipped without the CSV)

fs::path banknote_path() {
  if (const char* env = std::getenv("MCPL_BANKNOTE_CSV")) return env;
#ifdef MCPL_DATA_DIR
  return fs::path(MCPL_DATA_DIR) / "banknote_authentication.csv";
#else
  return fs::path("data") / "banknote_authentication.csv";
#endif
}

Outcome criterion_banknote_replication() {
  const fs::path csv = banknote_path();
  if (!fs::exists(csv))
    return skip("banknote CSV not found at " + csv.string() +
                " (set MCPL_BANKNOTE_CSV)");
  const auto start = std::chrono::steady_clock::now();

  const RawDataset raw = load_csv(csv);
  if (raw.features.rows() != 1372 || raw.features.cols() != 4 ||
      raw.class_count != 2)
    return fail("unexpected banknote shape");

  const PreprocessModel pre = fit_preprocess(raw, 0.999);
  const RawDataset prepared =
      with_features(raw, apply_preprocess(pre, raw.features));

  HarnessConfig cfg; // defaults: N = 2d+K = 10, half/half remainder
  cfg.estimators.hoc = true;
  std::vector<RepetitionRecord> records;
  for (int rep = 0; rep < 100; ++rep)
    records.push_back(run_repetition(prepared, cfg, 20260809, rep));
  const ExperimentReport report = aggregate(records, 1000);

  double sup_err = 0.0, semi_err = 0.0;
  for (const auto& [name, m] : report.means) {
    if (name == "sup") sup_err = m.test_error;
    if (name == "semi") semi_err = m.test_error;
  }
  double train_ll_win = 0.0;
  for (const auto& w : report.win_rates)
    if (w.a == "semi" && w.b == "sup") train_ll_win = w.train_loglik;
  const double rel_impr = report.relative_improvement->test_loglik;
  const double secs = elapsed_s(start);

  std::ostringstream detail;
  detail << "test error sup " << sup_err << " (ref 0.061 +/- 0.02), semi "
         << semi_err << " (ref 0.052 +/- 0.02), train LL win rate "
         << train_ll_win << "%, test LL relative improvement " << rel_impr
         << " (" << report.successful << "/100 reps, " << secs << " s)";
  const bool ok = report.successful == 100 &&
                  std::abs(sup_err - 0.061) <= 0.02 &&
                  std::abs(semi_err - 0.052) <= 0.02 && semi_err < sup_err &&
                  train_ll_win == 100.0 && rel_impr >= 0.9 && secs <= 900.0;
  return ok ? pass(detail.str()) : fail(detail.str());
}

// --- criterion 8: expected ordering of the training log-likelihoods

Outcome criterion_expected_ordering() {
  Rng rng(0xC8);
  double sup_sum = 0.0, semi_sum = 0.0, opt_sum = 0.0;
  int done = 0;
  while (done < 200) {
    const auto p = testutil::make_gaussian_problem(rng, 2, 2, 6, 20);
    LdaModel sup;
    try {
      sup = fit_supervised(p.labeled);
    } catch (const IllPosedError&) {
      continue;
    }
    ++done;
    const LabeledDataset full = training_union(p.labeled, p.unlabeled);
    const SolveResult r = solve(p.labeled, p.unlabeled, sup);
    const LdaModel opt = fit_optimal(p.labeled, p.unlabeled);
    sup_sum += log_likelihood(sup, full, true);
    semi_sum += log_likelihood(r.model, full, true);
    opt_sum += log_likelihood(opt, full, true);
  }
  std::ostringstream detail;
  detail << "mean training loglik: opt " << opt_sum / 200 << " >= semi "
         << semi_sum / 200 << " > sup " << sup_sum / 200;
  return opt_sum >= semi_sum && semi_sum > sup_sum ? pass(detail.str())
                                                   : fail(detail.str());
}

// --- criterion 9: benchmark determinism across runs and worker counts

Outcome criterion_cli_determinism() {
#ifndef MCPL_CLI_PATH
  return fail("CLI path not configured");
#else
  const fs::path dir = fs::temp_directory_path() / "mcpl_acceptance_cli";
  fs::remove_all(dir);
  fs::create_directories(dir);

  const fs::path csv = dir / "synth.csv";
  {
    Rng rng(0xC9);
    std::ofstream out(csv);
    out << "f1,f2,cls\n";
    for (int i = 0; i < 240; ++i) {
      const int c = static_cast<int>(rng.uniform_below(2));
      out << testutil::normal(rng) + 2.0 * c << ","
          << testutil::normal(rng) - c << ",k" << c << "\n";
    }
  }
  auto run = [&](const std::string& args) {
    const std::string cmd = std::string(MCPL_CLI_PATH) + " " + args +
                            " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string base =
      "benchmark --data " + csv.string() + " --seed 31 --reps 10 ";
  if (run(base + "--jobs 1 --out " + (dir / "a").string()) != 0)
    return fail("benchmark run failed");
  if (run(base + "--jobs 1 --out " + (dir / "b").string()) != 0)
    return fail("benchmark rerun failed");
  if (run(base + "--jobs 4 --out " + (dir / "c").string()) != 0)
    return fail("benchmark parallel run failed");
  const std::string a = slurp(dir / "a" / "report.json");
  if (a.empty()) return fail("empty report");
  if (a != slurp(dir / "b" / "report.json"))
    return fail("reports differ across identical runs");
  if (a != slurp(dir / "c" / "report.json"))
    return fail("reports differ across --jobs values");
  if (slurp(dir / "a" / "records.jsonl") != slurp(dir / "c" / "records.jsonl"))
    return fail("records differ across --jobs values");
  return pass("reports and records byte-identical across reruns and jobs 1/4");
#endif
}

// --- criterion 10: permutation test exact branch

Outcome criterion_permutation_exact() {
  const double p1 = permutation_test({1.0, 1.0, 1.0}, {0.0, 0.0, 0.0},
                                     10000, 1);
  if (p1 != 0.25)
    return fail("three-unit-differences case gave p = " + std::to_string(p1));
  const std::vector<double> same{0.4, -0.2, 0.9, 1.4};
  const double p2 = permutation_test(same, same, 10000, 2);
  if (p2 != 1.0)
    return fail("identical inputs gave p = " + std::to_string(p2));
  return pass("exact enumeration: p = 0.25 and p = 1 reproduced");
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);

  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "worst-case gain bound and strict training improvement",
       criterion_gain_and_strict_improvement},
      {2, "1-d toy saddle matches the grid oracle with first-order checks",
       criterion_toy_saddle_oracle},
      {3, "soft-label gradient matches central finite differences",
       criterion_gradient_finite_differences},
      {4, "closed-form fits are numerically maximal and mean-consistent",
       criterion_estimator_optimality},
      {5, "simplex projection matches the QP oracle",
       criterion_projection_oracle},
      {6, "exact inner minimum matches exhaustive vertex enumeration",
       criterion_inner_min_oracle},
      {7, "desk-scale banknote replication", criterion_banknote_replication},
      {8, "expected training ordering opt >= semi > sup",
       criterion_expected_ordering},
      {9, "byte-identical benchmark reports across runs and worker counts",
       criterion_cli_determinism},
      {10, "permutation test exact-enumeration branch",
       criterion_permutation_exact},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (only != 0 && c.id != only) continue;
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = fail(std::string("exception: ") + e.what());
    }
    const char* tag = outcome.skipped ? "SKIP" : outcome.passed ? "PASS"
                                                                : "FAIL";
    std::printf("[%s] criterion %d: %s - %s\n", tag, c.id, c.name,
                outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.passed && !outcome.skipped) ++failures;
  }
  return failures;
}
