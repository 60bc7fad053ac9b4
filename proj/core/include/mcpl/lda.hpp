#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <vector>

#include "mcpl/dataset.hpp"
#include "mcpl/soft_labels.hpp"

namespace mcpl {

/// Gaussian class-conditional model with shared within-class covariance:
/// class priors, one mean per class, one covariance for all classes.
struct LdaModel {
  Eigen::VectorXd priors;     // K, nonnegative, sums to 1
  Eigen::MatrixXd means;      // K x d
  Eigen::MatrixXd covariance; // d x d, symmetric positive definite

  int class_count() const { return static_cast<int>(priors.size()); }
  int dim() const { return static_cast<int>(means.cols()); }
};

/// Admissibility settings for the covariance estimate. The positive
/// definiteness floor is relative to trace/d so the check is scale-invariant.
struct WellPosedness {
  double pd_tol = 1e-10; // smallest admissible eigenvalue, x trace/d
  double ridge = 0.0;    // added to the covariance diagonal before the check
};

/// Supervised maximum-likelihood fit: priors N_k/N, class sample means, and
/// the pooled within-class scatter divided by N.
/// Throws IllPosedError when the covariance fails the pd_tol check.
LdaModel fit_supervised(const LabeledDataset& data,
                        const WellPosedness& wp = {});

/// Weighted maximum-likelihood fit where each unlabeled point contributes
/// q_ik of itself to class k. Reduces exactly to fit_supervised when the
/// unlabeled set is empty.
LdaModel fit_weighted(const LabeledDataset& labeled,
                      const UnlabeledSet& unlabeled, const SoftLabels& q,
                      const WellPosedness& wp = {});

/// Precomputed factorizations for repeated density evaluation on one model.
/// Validates well-posedness on construction. The log-determinant is the sum
/// of the logarithms of the covariance's singular values, which stays finite
/// where a naive determinant would overflow.
class LogDensityEvaluator {
 public:
  explicit LogDensityEvaluator(const LdaModel& model,
                               const WellPosedness& wp = {});

  /// log pi_k + log g(x | mu_k, Sigma); -inf when pi_k == 0.
  double joint_log_density(const Eigen::VectorXd& x, int k) const;

  /// N x K matrix of joint log densities for a batch of rows.
  Eigen::MatrixXd joint_log_densities(const Eigen::MatrixXd& features) const;

  double log_det() const { return log_det_; }
  const LdaModel& model() const { return model_; }

 private:
  LdaModel model_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd log_priors_; // -inf entries where priors vanish
  double log_det_ = 0.0;
  double norm_const_ = 0.0; // -(d/2) log 2*pi - (1/2) log det
};

double joint_log_density(const LdaModel& model, const Eigen::VectorXd& x,
                         int k);

/// Sum over points of the joint log density of (x_i, y_i); divided by the
/// point count when normalize is set (the per-object reporting convention).
double log_likelihood(const LdaModel& model, const LabeledDataset& data,
                      bool normalize = true);

/// Class posteriors at x via max-shifted exponentiation; sums to 1.
Eigen::VectorXd posteriors(const LdaModel& model, const Eigen::VectorXd& x);

/// Arg-max of the joint log density per row, ties toward the smallest class.
std::vector<int> classify(const LdaModel& model,
                          const Eigen::MatrixXd& features);

/// Fraction of misclassified points in [0, 1].
double error_rate(const LdaModel& model, const LabeledDataset& test);

}  // namespace mcpl
