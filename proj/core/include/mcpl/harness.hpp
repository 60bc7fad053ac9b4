#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mcpl/baselines.hpp"
#include "mcpl/dataset.hpp"
#include "mcpl/lda.hpp"
#include "mcpl/solver.hpp"

namespace mcpl {

/// Estimator identifiers, in canonical order: sup, semi, opt, hoc, self.
struct EstimatorSet {
  bool semi = true;
  bool opt = true;
  bool hoc = true;
  bool self = false;

  std::vector<std::string> names() const;
};

struct EstimatorMetrics {
  double train_loglik = 0.0; // per-object, on labeled + unlabeled (true labels)
  double test_loglik = 0.0;  // per-object, on the held-out test set
  double train_error = 0.0;
  double test_error = 0.0;
};

struct SolverStats {
  int iterations = 0;
  double gain = 0.0;
  bool converged = false;
  bool supervised_fallback = false;
};

struct RepetitionRecord {
  std::uint64_t master_seed = 0;
  int rep_index = 0;
  std::uint64_t seed = 0; // derived split seed
  bool ok = false;
  std::string failure_reason; // set when !ok; never silently dropped
  std::vector<std::pair<std::string, EstimatorMetrics>> metrics;
  std::optional<SolverStats> solver;                     // when semi ran
  std::optional<ConstrainedFitDiagnostics> hoc_diagnostics; // when hoc ran
};

struct HarnessConfig {
  SplitSpec split; // the seed field is ignored; per-repetition seeds rule
  SolverConfig solver;
  WellPosedness wp;
  EstimatorSet estimators;
  int self_max_rounds = 50;
};

/// Derives per-repetition seeds from one master seed; injective in the
/// repetition index, so repetitions may run in any order or in parallel.
struct MasterSeedPlan {
  std::uint64_t master = 0;
  std::uint64_t seed_for(int rep_index) const;
};

/// One split, all enabled estimators fit on the identical labeled/unlabeled
/// sets, metrics on both the full training set (true labels) and the test
/// set. An ill-posed fit marks the repetition failed with the reason.
RepetitionRecord run_repetition(const RawDataset& preprocessed,
                                const HarnessConfig& cfg,
                                std::uint64_t master_seed, int rep_index);

struct PreprocessOptions {
  double retain = 0.999;
  double zero_var_tol = 1e-12;
};

/// Deployment-honest variant: the split is drawn on the raw data, the
/// preprocessing is fit on the labeled + unlabeled rows only, and the test
/// set never influences the transform. An automatic labeled size uses the
/// raw dimension (2 * D_raw + K), since the reduced dimension is not known
/// before the split.
RepetitionRecord run_repetition_train_only(const RawDataset& raw,
                                           const PreprocessOptions& pre,
                                           const HarnessConfig& cfg,
                                           std::uint64_t master_seed,
                                           int rep_index);

/// Win percentages of `a` strictly beating `b`: larger log-likelihood,
/// smaller error. Values in [0, 100].
struct PairWins {
  std::string a, b;
  double train_loglik = 0.0;
  double test_loglik = 0.0;
  double train_error = 0.0;
  double test_error = 0.0;
};

/// Ratio of mean differences (semi - sup) / (opt - sup); NaN flags 0/0.
struct RelativeImprovement {
  double train_loglik = 0.0;
  double test_loglik = 0.0;
  double train_error = 0.0;
  double test_error = 0.0;
};

struct PairPValue {
  std::string a, b;
  std::string metric; // "loglik" | "error"
  std::string split;  // "train" | "test"
  double p = 1.0;
};

struct ExperimentReport {
  std::uint64_t master_seed = 0;
  int repetitions = 0; // total records
  int successful = 0;
  std::vector<std::pair<int, std::string>> failures; // rep index, reason
  std::vector<std::string> estimators;
  std::vector<std::pair<std::string, EstimatorMetrics>> means;
  std::vector<PairWins> win_rates;
  std::optional<RelativeImprovement> relative_improvement;
  std::vector<PairPValue> p_values;
  int permutations = 0;
  std::optional<double> mean_solver_iterations;
  std::optional<double> mean_gain;
  int hoc_pd_projections = 0;
};

/// Order-independent aggregation: records are sorted by repetition index, so
/// any execution order or parallelism degree yields the same report.
/// Throws when no record succeeded.
ExperimentReport aggregate(const std::vector<RepetitionRecord>& records,
                           int permutations = 10000);

/// Two-sided paired sign-flip permutation test of the mean difference.
/// Enumerates all 2^n sign patterns when that is no more work than the
/// requested permutation count; otherwise Monte Carlo with the add-one
/// correction, so p lies in (0, 1] either way.
double permutation_test(const std::vector<double>& a,
                        const std::vector<double>& b, int permutations,
                        std::uint64_t seed);

}  // namespace mcpl
