#include "mcpl/baselines.hpp"

#include <Eigen/Eigenvalues>

#include "mcpl/errors.hpp"

namespace mcpl {

namespace {

LabeledDataset concat(const LabeledDataset& labeled,
                      const UnlabeledSet& unlabeled,
                      const std::vector<int>& u_labels) {
  LabeledDataset out;
  const int n = labeled.size();
  const int m = unlabeled.size();
  out.features.resize(n + m, labeled.dim());
  out.features.topRows(n) = labeled.features;
  out.features.bottomRows(m) = unlabeled.features;
  out.labels = labeled.labels;
  out.labels.insert(out.labels.end(), u_labels.begin(), u_labels.end());
  out.class_count = labeled.class_count;
  return out;
}

}  // namespace

LdaModel fit_optimal(const LabeledDataset& labeled,
                     const UnlabeledSet& unlabeled, const WellPosedness& wp) {
  if (unlabeled.size() == 0) return fit_supervised(labeled, wp);
  if (!unlabeled.oracle_labels)
    throw InvalidArgument("fit_optimal: oracle labels missing");
  return fit_supervised(concat(labeled, unlabeled, *unlabeled.oracle_labels),
                        wp);
}

ConstrainedFit fit_constrained(const LabeledDataset& labeled,
                               const UnlabeledSet& unlabeled,
                               const WellPosedness& wp) {
  ConstrainedFit out;
  out.model = fit_supervised(labeled, wp);
  if (unlabeled.size() == 0) return out;

  const int d = labeled.dim();
  const int k = labeled.class_count;
  const int n = labeled.size();
  const int m = unlabeled.size();

  const Eigen::VectorXd mu_all =
      (labeled.features.colwise().sum() + unlabeled.features.colwise().sum())
          .transpose() /
      static_cast<double>(n + m);

  // Shift every class mean by the same delta; priors stay fixed, so the
  // prior-weighted mean lands exactly on the all-data mean.
  const Eigen::VectorXd mix =
      out.model.means.transpose() * out.model.priors;
  const Eigen::VectorXd delta = mu_all - mix;
  out.diagnostics.mean_residual_pre = delta.norm();
  out.model.means.rowwise() += delta.transpose();
  out.diagnostics.mean_residual_post =
      (mu_all - out.model.means.transpose() * out.model.priors).norm();

  // Within-class covariance from the total/between decomposition on all
  // N + M points (maximum-likelihood divisor).
  Eigen::MatrixXd total = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd r = labeled.features.row(i).transpose() - mu_all;
    total.noalias() += r * r.transpose();
  }
  for (int i = 0; i < m; ++i) {
    const Eigen::VectorXd r = unlabeled.features.row(i).transpose() - mu_all;
    total.noalias() += r * r.transpose();
  }
  total /= static_cast<double>(n + m);

  Eigen::MatrixXd between = Eigen::MatrixXd::Zero(d, d);
  for (int c = 0; c < k; ++c) {
    const Eigen::VectorXd r = out.model.means.row(c).transpose() - mu_all;
    between.noalias() += out.model.priors(c) * (r * r.transpose());
  }

  Eigen::MatrixXd within = total - between;
  // Decomposition residual before any projection; a projection event is
  // reported separately via pd_projected.
  out.diagnostics.covariance_residual = (total - between - within).norm();

  // Floor on the scale of the all-data covariance: the subtraction can leave
  // `within` with a non-positive trace, which would invert a trace-relative
  // floor's sign.
  const double floor = wp.pd_tol * total.trace() / d;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(within);
  if (!(eig.eigenvalues().minCoeff() > floor)) {
    Eigen::VectorXd clamped = eig.eigenvalues().cwiseMax(floor);
    within = eig.eigenvectors() * clamped.asDiagonal() *
             eig.eigenvectors().transpose();
    out.diagnostics.pd_projected = true;
  }
  out.model.covariance = within;
  if (wp.ridge > 0.0) out.model.covariance.diagonal().array() += wp.ridge;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> check(out.model.covariance,
                                                       Eigen::EigenvaluesOnly);
  const double final_floor =
      wp.pd_tol * out.model.covariance.trace() / d;
  if (!(check.eigenvalues().minCoeff() > final_floor))
    throw IllPosedError("fit_constrained: covariance not positive definite "
                        "after projection");
  return out;
}

SelfTrainingResult fit_self_training(const LabeledDataset& labeled,
                                     const UnlabeledSet& unlabeled,
                                     const WellPosedness& wp, int max_rounds) {
  if (max_rounds < 1)
    throw InvalidArgument("fit_self_training: max_rounds must be >= 1");
  SelfTrainingResult out;
  out.model = fit_supervised(labeled, wp);
  if (unlabeled.size() == 0) {
    out.converged = true;
    return out;
  }
  std::vector<int> assigned;
  for (int round = 1; round <= max_rounds; ++round) {
    out.rounds = round;
    std::vector<int> next = classify(out.model, unlabeled.features);
    if (round > 1 && next == assigned) {
      out.converged = true;
      break;
    }
    assigned = std::move(next);
    out.model = fit_supervised(concat(labeled, unlabeled, assigned), wp);
  }
  return out;
}

}  // namespace mcpl
