#include "mcpl/lda.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <numbers>

#include "mcpl/errors.hpp"

namespace mcpl {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_labels(const LabeledDataset& data) {
  if (data.class_count < 1) throw InvalidArgument("class_count must be >= 1");
  if (data.labels.size() != static_cast<std::size_t>(data.features.rows()))
    throw DimensionError("label count does not match feature rows");
  for (int y : data.labels) {
    if (y < 1 || y > data.class_count)
      throw InvalidArgument("label " + std::to_string(y) + " outside 1.." +
                            std::to_string(data.class_count));
  }
}

/// Shared weighted-ML core; the supervised fit is the M = 0 special case.
LdaModel fit_core(const LabeledDataset& labeled, const Eigen::MatrixXd& u,
                  const Eigen::MatrixXd& w, const WellPosedness& wp) {
  check_labels(labeled);
  const int n = labeled.size();
  const int m = static_cast<int>(u.rows());
  const int k = labeled.class_count;
  const int d = labeled.dim();
  if (n < 1) throw InvalidArgument("fit: empty labeled set");
  if (m > 0 && u.cols() != d)
    throw DimensionError("fit: unlabeled dimension mismatch");

  Eigen::VectorXd class_weight = Eigen::VectorXd::Zero(k);
  Eigen::MatrixXd mean_acc = Eigen::MatrixXd::Zero(k, d);
  for (int i = 0; i < n; ++i) {
    const int c = labeled.labels[static_cast<std::size_t>(i)] - 1;
    class_weight(c) += 1.0;
    mean_acc.row(c) += labeled.features.row(i);
  }
  for (int i = 0; i < m; ++i) {
    for (int c = 0; c < k; ++c) {
      const double q = w(i, c);
      if (q == 0.0) continue;
      class_weight(c) += q;
      mean_acc.row(c) += q * u.row(i);
    }
  }
  for (int c = 0; c < k; ++c) {
    if (class_weight(c) <= 0.0)
      throw Error("fit: class " + std::to_string(c + 1) +
                  " received zero total weight");
  }

  LdaModel model;
  model.priors = class_weight / static_cast<double>(n + m);
  model.means.resize(k, d);
  for (int c = 0; c < k; ++c) model.means.row(c) = mean_acc.row(c) / class_weight(c);

  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < n; ++i) {
    const int c = labeled.labels[static_cast<std::size_t>(i)] - 1;
    const Eigen::VectorXd r = labeled.features.row(i) - model.means.row(c);
    scatter.noalias() += r * r.transpose();
  }
  for (int i = 0; i < m; ++i) {
    for (int c = 0; c < k; ++c) {
      const double q = w(i, c);
      if (q == 0.0) continue;
      const Eigen::VectorXd r = u.row(i) - model.means.row(c);
      scatter.noalias() += q * (r * r.transpose());
    }
  }
  model.covariance = scatter / static_cast<double>(n + m);
  if (wp.ridge > 0.0)
    model.covariance.diagonal().array() += wp.ridge;

  const double floor = wp.pd_tol * model.covariance.trace() / d;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(model.covariance,
                                                     Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues().minCoeff() > floor))
    throw IllPosedError(
        "fit: covariance not positive definite (smallest eigenvalue " +
        std::to_string(eig.eigenvalues().minCoeff()) + ")");
  return model;
}

}  // namespace

SoftLabels SoftLabels::uniform(int m, int k) {
  SoftLabels q;
  q.weights = Eigen::MatrixXd::Constant(m, k, 1.0 / k);
  return q;
}

SoftLabels SoftLabels::vertex(const std::vector<int>& labels, int k) {
  SoftLabels q;
  q.weights =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(labels.size()), k);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 1 || y > k)
      throw InvalidArgument("vertex: label outside 1..K");
    q.weights(static_cast<Eigen::Index>(i), y - 1) = 1.0;
  }
  return q;
}

bool SoftLabels::is_valid(double tol) const {
  if ((weights.array() < 0.0).any()) return false;
  return ((weights.rowwise().sum().array() - 1.0).abs() <= tol).all();
}

void SoftLabels::validate(double tol) const {
  if (!is_valid(tol))
    throw InvalidArgument("soft labels: rows must lie on the simplex");
}

LdaModel fit_supervised(const LabeledDataset& data, const WellPosedness& wp) {
  if (data.size() < 2) throw InvalidArgument("fit_supervised: need N >= 2");
  const Eigen::MatrixXd empty_u(0, data.dim());
  const Eigen::MatrixXd empty_w(0, data.class_count);
  return fit_core(data, empty_u, empty_w, wp);
}

LdaModel fit_weighted(const LabeledDataset& labeled,
                      const UnlabeledSet& unlabeled, const SoftLabels& q,
                      const WellPosedness& wp) {
  if (q.weights.rows() != unlabeled.features.rows())
    throw DimensionError("fit_weighted: q rows != unlabeled size");
  if (unlabeled.size() > 0 && q.class_count() != labeled.class_count)
    throw DimensionError("fit_weighted: q columns != class count");
  q.validate();
  return fit_core(labeled, unlabeled.features, q.weights, wp);
}

LogDensityEvaluator::LogDensityEvaluator(const LdaModel& model,
                                         const WellPosedness& wp)
    : model_(model) {
  const int d = model.dim();
  const int k = model.class_count();
  if (model.covariance.rows() != d || model.covariance.cols() != d)
    throw DimensionError("model: covariance shape mismatch");
  if (model.means.rows() != k)
    throw DimensionError("model: means shape mismatch");
  if ((model.priors.array() < 0.0).any() ||
      std::abs(model.priors.sum() - 1.0) > 1e-12)
    throw InvalidArgument("model: priors must form a probability vector");
  if (!model.covariance.isApprox(model.covariance.transpose(), 1e-10))
    throw InvalidArgument("model: covariance must be symmetric");

  const double floor = wp.pd_tol * model.covariance.trace() / d;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(model.covariance,
                                                     Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues().minCoeff() > floor))
    throw IllPosedError("model: covariance not positive definite");

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(model.covariance);
  log_det_ = svd.singularValues().array().log().sum();
  llt_.compute(model.covariance);
  if (llt_.info() != Eigen::Success)
    throw IllPosedError("model: Cholesky factorization failed");

  log_priors_.resize(k);
  for (int c = 0; c < k; ++c)
    log_priors_(c) = model.priors(c) > 0.0 ? std::log(model.priors(c)) : kNegInf;
  norm_const_ = -0.5 * d * std::log(2.0 * std::numbers::pi) - 0.5 * log_det_;
}

double LogDensityEvaluator::joint_log_density(const Eigen::VectorXd& x,
                                              int k) const {
  if (k < 1 || k > model_.class_count())
    throw InvalidArgument("joint_log_density: class index outside 1..K");
  if (x.size() != model_.dim())
    throw DimensionError("joint_log_density: dimension mismatch");
  if (model_.priors(k - 1) == 0.0) return kNegInf;
  const Eigen::VectorXd r = x - model_.means.row(k - 1).transpose();
  const double quad = llt_.matrixL().solve(r).squaredNorm();
  return log_priors_(k - 1) + norm_const_ - 0.5 * quad;
}

Eigen::MatrixXd LogDensityEvaluator::joint_log_densities(
    const Eigen::MatrixXd& features) const {
  if (features.cols() != model_.dim())
    throw DimensionError("joint_log_densities: dimension mismatch");
  const int n = static_cast<int>(features.rows());
  const int k = model_.class_count();
  Eigen::MatrixXd out(n, k);
  for (int c = 0; c < k; ++c) {
    if (model_.priors(c) == 0.0) {
      out.col(c).setConstant(kNegInf);
      continue;
    }
    Eigen::MatrixXd r = features.rowwise() - model_.means.row(c);
    llt_.matrixL().solveInPlace(r.transpose());
    out.col(c) = (log_priors_(c) + norm_const_) -
                 0.5 * r.rowwise().squaredNorm().array();
  }
  return out;
}

double joint_log_density(const LdaModel& model, const Eigen::VectorXd& x,
                         int k) {
  return LogDensityEvaluator(model).joint_log_density(x, k);
}

double log_likelihood(const LdaModel& model, const LabeledDataset& data,
                      bool normalize) {
  if (data.size() < 1) throw InvalidArgument("log_likelihood: empty data");
  check_labels(data);
  LogDensityEvaluator eval(model);
  const Eigen::MatrixXd dens = eval.joint_log_densities(data.features);
  double total = 0.0;
  for (int i = 0; i < data.size(); ++i)
    total += dens(i, data.labels[static_cast<std::size_t>(i)] - 1);
  return normalize ? total / data.size() : total;
}

Eigen::VectorXd posteriors(const LdaModel& model, const Eigen::VectorXd& x) {
  LogDensityEvaluator eval(model);
  const int k = model.class_count();
  Eigen::VectorXd logs(k);
  for (int c = 1; c <= k; ++c) logs(c - 1) = eval.joint_log_density(x, c);
  const double shift = logs.maxCoeff();
  Eigen::VectorXd p(k);
  for (int c = 0; c < k; ++c)
    p(c) = std::isinf(logs(c)) ? 0.0 : std::exp(logs(c) - shift);
  return p / p.sum();
}

std::vector<int> classify(const LdaModel& model,
                          const Eigen::MatrixXd& features) {
  LogDensityEvaluator eval(model);
  const Eigen::MatrixXd dens = eval.joint_log_densities(features);
  std::vector<int> labels(static_cast<std::size_t>(features.rows()));
  for (int i = 0; i < features.rows(); ++i) {
    int best = 0;
    for (int c = 1; c < dens.cols(); ++c)
      if (dens(i, c) > dens(i, best)) best = c;
    labels[static_cast<std::size_t>(i)] = best + 1;
  }
  return labels;
}

double error_rate(const LdaModel& model, const LabeledDataset& test) {
  check_labels(test);
  if (test.size() < 1) throw InvalidArgument("error_rate: empty test set");
  const std::vector<int> predicted = classify(model, test.features);
  int wrong = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    if (predicted[i] != test.labels[i]) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(test.size());
}

}  // namespace mcpl
