#pragma once

#include <Eigen/Core>
#include <vector>

#include "mcpl/dataset.hpp"
#include "mcpl/lda.hpp"
#include "mcpl/soft_labels.hpp"

namespace mcpl {

struct SolverConfig {
  int max_iters = 1000;
  double objective_tol = 1e-6; // halt when the maximin objective moves less
  double step_base = 1.0;      // step at iteration t is step_base / t
  enum class QInit { kUniform, kSupervisedPosteriors };
  QInit q_init = QInit::kUniform;
  bool record_trace = false;
};

struct SolveResult {
  LdaModel model;  // the semi-supervised estimate
  SoftLabels q;    // pessimistic soft labels paired with the model
  double gain = 0.0; // worst-case likelihood gain over the supervised fit
  int iterations = 0;
  bool converged = false;
  // Set when the final iterate's worst-case gain fell below -1e-8 and the
  // supervised model (gain exactly 0) was returned instead.
  bool supervised_fallback = false;
  std::vector<double> trace; // per-iteration objective, when recorded
};

/// Likelihood gain of `theta` over `theta_sup` on labeled data plus
/// soft-labeled unlabeled data. Terms with zero weight contribute exactly 0
/// even when the log density is -inf. The weights matrix need not have
/// simplex rows (the function is linear in them).
double contrastive_likelihood(const LdaModel& theta, const LdaModel& theta_sup,
                              const LabeledDataset& labeled,
                              const UnlabeledSet& unlabeled,
                              const Eigen::MatrixXd& weights);

double contrastive_likelihood(const LdaModel& theta, const LdaModel& theta_sup,
                              const LabeledDataset& labeled,
                              const UnlabeledSet& unlabeled,
                              const SoftLabels& q);

struct PessimisticGain {
  double value = 0.0;
  SoftLabels minimizer; // a vertex: one-hot rows, ties toward the smallest k
};

/// Exact inner minimum of the contrastive likelihood over all soft
/// labelings. The objective is linear and separable in the rows of q, so the
/// minimum sits at a per-point vertex.
PessimisticGain pessimistic_gain(const LdaModel& theta,
                                 const LdaModel& theta_sup,
                                 const LabeledDataset& labeled,
                                 const UnlabeledSet& unlabeled);

/// Gradient of the contrastive likelihood in q: per-point per-class contrast
/// of joint log densities between `theta` and `theta_sup`.
Eigen::MatrixXd q_gradient(const LdaModel& theta, const LdaModel& theta_sup,
                           const UnlabeledSet& unlabeled);

/// Euclidean projection onto the probability simplex (sort and threshold).
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v);

/// Alternating maximin solver: refit the model on the current soft labels,
/// then take a projected gradient step on the soft labels against the
/// contrast, with step step_base/t. Stops when the maximin objective changes
/// by less than objective_tol. The returned model is always the exact
/// weighted refit of the returned q.
SolveResult solve(const LabeledDataset& labeled, const UnlabeledSet& unlabeled,
                  const LdaModel& theta_sup, const SolverConfig& cfg = {},
                  const WellPosedness& wp = {});

}  // namespace mcpl
