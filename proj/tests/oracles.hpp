#pragma once

// Independent reference implementations used only by tests. Everything here
// recomputes quantities from first principles (own determinants, exhaustive
// enumeration, generic numeric optimization) without touching the library's
// evaluation paths.

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "mcpl/dataset.hpp"
#include "mcpl/lda.hpp"

namespace mcpl::oracle {

/// Determinant by plain LU elimination with partial pivoting.
double determinant(Eigen::MatrixXd a);

/// Matrix inverse by Gauss-Jordan elimination.
Eigen::MatrixXd inverse(const Eigen::MatrixXd& a);

/// Gaussian density (not log) evaluated directly from the formula.
double gauss_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mu,
                 const Eigen::MatrixXd& sigma);

/// log(pi_k * g(x | mu_k, Sigma)) from the direct formula.
double joint_log_density(const LdaModel& model, const Eigen::VectorXd& x,
                         int k);

/// Hard-label log-likelihood (sum over points).
double log_likelihood(const LdaModel& model, const LabeledDataset& data);

/// Soft-label log-likelihood: labeled sum plus q-weighted unlabeled sum.
double weighted_log_likelihood(const LdaModel& model,
                               const LabeledDataset& labeled,
                               const Eigen::MatrixXd& unlabeled,
                               const Eigen::MatrixXd& weights);

/// Exact Euclidean projection onto the simplex by enumerating all support
/// sets and picking the feasible candidate with the smallest distance.
Eigen::VectorXd project_simplex_qp(const Eigen::VectorXd& v);

/// Exhaustive inner minimum over all K^M hard labelings of the unlabeled
/// points: min_V [ L(theta|X_V) - L(theta_sup|X_V) ].
double min_contrast_over_labelings(const LdaModel& theta,
                                   const LdaModel& theta_sup,
                                   const LabeledDataset& labeled,
                                   const Eigen::MatrixXd& unlabeled);

/// Nelder-Mead minimizer (maximize by negating). Returns the best value.
double nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                   Eigen::VectorXd x0, double initial_step = 0.1,
                   int max_evals = 20000, double tol = 1e-12);

/// Best log-likelihood a generic numeric maximizer finds for the weighted
/// LDA objective, seeded at `start` (and nudged restarts around it).
/// Pass an empty unlabeled matrix for the supervised objective.
double numeric_max_loglik(const LabeledDataset& labeled,
                          const Eigen::MatrixXd& unlabeled,
                          const Eigen::MatrixXd& weights,
                          const LdaModel& start, int restarts = 2,
                          std::uint64_t seed = 7);

}  // namespace mcpl::oracle
