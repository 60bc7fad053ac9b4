#pragma once

#include "mcpl/dataset.hpp"
#include "mcpl/lda.hpp"

namespace mcpl {

/// Residuals recorded while fitting the constrained baseline, so the
/// closed-form reconstruction can be audited.
struct ConstrainedFitDiagnostics {
  double mean_residual_pre = 0.0;  // || mu_all - sum_k pi_k mu_k || before the shift
  double mean_residual_post = 0.0; // same after the shift
  double covariance_residual = 0.0; // Frobenius gap in the total = between + within split
  bool pd_projected = false; // eigenvalue floor applied to the covariance
};

struct ConstrainedFit {
  LdaModel model;
  ConstrainedFitDiagnostics diagnostics;
};

struct SelfTrainingResult {
  LdaModel model;
  int rounds = 0;
  bool converged = false; // labeling reached a fixed point before the cap
};

/// Supervised fit on labeled data plus the unlabeled points with their true
/// labels attached; the by-construction upper baseline.
LdaModel fit_optimal(const LabeledDataset& labeled,
                     const UnlabeledSet& unlabeled,
                     const WellPosedness& wp = {});

/// Constrained baseline: supervised estimates adjusted in closed form so the
/// prior-weighted mean matches the all-data mean and the covariance equals
/// the all-data total covariance minus the between-class part. Projected to
/// the positive definite cone when the subtraction leaves it indefinite.
ConstrainedFit fit_constrained(const LabeledDataset& labeled,
                               const UnlabeledSet& unlabeled,
                               const WellPosedness& wp = {});

/// Hard-label self-training: label all unlabeled points with the current
/// model, refit supervised on the union, repeat until the labeling is
/// unchanged or max_rounds is reached.
SelfTrainingResult fit_self_training(const LabeledDataset& labeled,
                                     const UnlabeledSet& unlabeled,
                                     const WellPosedness& wp = {},
                                     int max_rounds = 50);

}  // namespace mcpl
