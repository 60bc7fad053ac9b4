#include "mcpl/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mcpl/errors.hpp"

namespace mcpl {

namespace {

double hard_label_sum(const Eigen::MatrixXd& dens,
                      const std::vector<int>& labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    total += dens(static_cast<Eigen::Index>(i), labels[i] - 1);
  return total;
}

/// q-weighted sum with the 0 * (-inf) := 0 convention.
double weighted_sum(const Eigen::MatrixXd& dens,
                    const Eigen::MatrixXd& weights) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < dens.rows(); ++i) {
    for (Eigen::Index c = 0; c < dens.cols(); ++c) {
      const double w = weights(i, c);
      if (w == 0.0) continue;
      total += w * dens(i, c);
    }
  }
  return total;
}

struct InnerMin {
  double value = 0.0;
  std::vector<int> argmin; // per-point class, 1-based
};

InnerMin row_minima(const Eigen::MatrixXd& contrast) {
  InnerMin out;
  out.argmin.resize(static_cast<std::size_t>(contrast.rows()));
  for (Eigen::Index i = 0; i < contrast.rows(); ++i) {
    int best = 0;
    for (Eigen::Index c = 1; c < contrast.cols(); ++c)
      if (contrast(i, c) < contrast(i, best)) best = static_cast<int>(c);
    out.value += contrast(i, best);
    out.argmin[static_cast<std::size_t>(i)] = best + 1;
  }
  return out;
}

}  // namespace

double contrastive_likelihood(const LdaModel& theta, const LdaModel& theta_sup,
                              const LabeledDataset& labeled,
                              const UnlabeledSet& unlabeled,
                              const Eigen::MatrixXd& weights) {
  if (weights.rows() != unlabeled.features.rows())
    throw DimensionError("contrastive_likelihood: weight rows != M");
  const LogDensityEvaluator eval(theta);
  const LogDensityEvaluator eval_sup(theta_sup);
  double value = hard_label_sum(eval.joint_log_densities(labeled.features),
                                labeled.labels) -
                 hard_label_sum(eval_sup.joint_log_densities(labeled.features),
                                labeled.labels);
  if (unlabeled.size() > 0) {
    value += weighted_sum(eval.joint_log_densities(unlabeled.features), weights);
    value -= weighted_sum(eval_sup.joint_log_densities(unlabeled.features),
                          weights);
  }
  return value;
}

double contrastive_likelihood(const LdaModel& theta, const LdaModel& theta_sup,
                              const LabeledDataset& labeled,
                              const UnlabeledSet& unlabeled,
                              const SoftLabels& q) {
  return contrastive_likelihood(theta, theta_sup, labeled, unlabeled,
                                q.weights);
}

PessimisticGain pessimistic_gain(const LdaModel& theta,
                                 const LdaModel& theta_sup,
                                 const LabeledDataset& labeled,
                                 const UnlabeledSet& unlabeled) {
  const LogDensityEvaluator eval(theta);
  const LogDensityEvaluator eval_sup(theta_sup);
  const double labeled_contrast =
      hard_label_sum(eval.joint_log_densities(labeled.features),
                     labeled.labels) -
      hard_label_sum(eval_sup.joint_log_densities(labeled.features),
                     labeled.labels);

  PessimisticGain out;
  if (unlabeled.size() == 0) {
    out.value = labeled_contrast;
    out.minimizer.weights.resize(0, labeled.class_count);
    return out;
  }
  const Eigen::MatrixXd contrast =
      eval.joint_log_densities(unlabeled.features) -
      eval_sup.joint_log_densities(unlabeled.features);
  const InnerMin inner = row_minima(contrast);
  out.value = labeled_contrast + inner.value;
  out.minimizer = SoftLabels::vertex(inner.argmin, labeled.class_count);
  return out;
}

Eigen::MatrixXd q_gradient(const LdaModel& theta, const LdaModel& theta_sup,
                           const UnlabeledSet& unlabeled) {
  const LogDensityEvaluator eval(theta);
  const LogDensityEvaluator eval_sup(theta_sup);
  return eval.joint_log_densities(unlabeled.features) -
         eval_sup.joint_log_densities(unlabeled.features);
}

Eigen::VectorXd project_simplex(const Eigen::VectorXd& v) {
  if (!v.allFinite())
    throw InvalidArgument("project_simplex: non-finite input");
  const int k = static_cast<int>(v.size());
  if (k < 1) throw InvalidArgument("project_simplex: empty vector");
  std::vector<double> u(v.data(), v.data() + k);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumsum = 0.0;
  double tau = 0.0;
  for (int j = 0; j < k; ++j) {
    cumsum += u[static_cast<std::size_t>(j)];
    const double candidate = (cumsum - 1.0) / (j + 1);
    if (u[static_cast<std::size_t>(j)] - candidate > 0.0) tau = candidate;
  }
  return (v.array() - tau).max(0.0);
}

SolveResult solve(const LabeledDataset& labeled, const UnlabeledSet& unlabeled,
                  const LdaModel& theta_sup, const SolverConfig& cfg,
                  const WellPosedness& wp) {
  if (cfg.max_iters < 1)
    throw InvalidArgument("solve: max_iters must be >= 1");
  if (!(cfg.objective_tol > 0.0))
    throw InvalidArgument("solve: objective_tol must be positive");
  if (!(cfg.step_base > 0.0))
    throw InvalidArgument("solve: step_base must be positive");

  const int m = unlabeled.size();
  const int k = labeled.class_count;

  SolveResult result;
  if (m == 0) {
    result.model = theta_sup;
    result.q.weights.resize(0, k);
    result.gain = 0.0;
    result.converged = true;
    return result;
  }

  const LogDensityEvaluator sup_eval(theta_sup, wp);
  const Eigen::MatrixXd sup_dens_u =
      sup_eval.joint_log_densities(unlabeled.features);
  const double sup_ll_labeled = hard_label_sum(
      sup_eval.joint_log_densities(labeled.features), labeled.labels);

  SoftLabels q = SoftLabels::uniform(m, k);
  if (cfg.q_init == SolverConfig::QInit::kSupervisedPosteriors) {
    for (int i = 0; i < m; ++i) {
      const Eigen::VectorXd row = sup_dens_u.row(i);
      const double shift = row.maxCoeff();
      Eigen::VectorXd p(k);
      for (int c = 0; c < k; ++c)
        p(c) = std::isinf(row(c)) ? 0.0 : std::exp(row(c) - shift);
      q.weights.row(i) = p.transpose() / p.sum();
    }
  }

  double prev_gain = std::numeric_limits<double>::quiet_NaN();
  double best_gain = -std::numeric_limits<double>::infinity();
  Eigen::MatrixXd best_q;
  for (int t = 1; t <= cfg.max_iters; ++t) {
    result.model = fit_weighted(labeled, unlabeled, q, wp);
    const LogDensityEvaluator eval(result.model, wp);

    const Eigen::MatrixXd grad =
        eval.joint_log_densities(unlabeled.features) - sup_dens_u;
    const double labeled_contrast =
        hard_label_sum(eval.joint_log_densities(labeled.features),
                       labeled.labels) -
        sup_ll_labeled;
    const double gain = labeled_contrast + row_minima(grad).value;
    if (!std::isfinite(gain))
      throw Error("solve: objective became non-finite at iteration " +
                  std::to_string(t));

    result.iterations = t;
    if (cfg.record_trace) result.trace.push_back(gain);
    result.gain = gain;
    if (gain > best_gain) {
      best_gain = gain;
      best_q = q.weights;
    }
    if (t > 1 && std::abs(gain - prev_gain) < cfg.objective_tol) {
      result.converged = true;
      break;
    }
    prev_gain = gain;
    if (t == cfg.max_iters) break;

    const double step = cfg.step_base / t;
    for (int i = 0; i < m; ++i) {
      q.weights.row(i) = project_simplex(q.weights.row(i).transpose() -
                                         step * grad.row(i).transpose())
                             .transpose();
    }
  }
  result.q = std::move(q);

  // A run that exhausts the iteration cap usually did so in a step-size
  // oscillation between two q configurations; the best iterate seen is then
  // the meaningful maximin candidate. Converged runs keep the last iterate.
  if (!result.converged && best_gain > result.gain) {
    result.q.weights = std::move(best_q);
    result.model = fit_weighted(labeled, unlabeled, result.q, wp);
    result.gain = best_gain;
  }

  // The supervised model always attains a worst-case gain of exactly 0, so a
  // final iterate below that (minus numerical slack) is discarded for it.
  if (result.gain < -1e-8) {
    result.model = theta_sup;
    result.q = pessimistic_gain(theta_sup, theta_sup, labeled, unlabeled)
                   .minimizer;
    result.gain = 0.0;
    result.supervised_fallback = true;
  }
  return result;
}

}  // namespace mcpl
