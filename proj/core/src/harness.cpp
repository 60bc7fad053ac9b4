#include "mcpl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mcpl/errors.hpp"
#include "mcpl/rng.hpp"

namespace mcpl {

namespace {

LabeledDataset full_training_set(const Split& s) {
  LabeledDataset out;
  const int n = s.labeled.size();
  const int m = s.unlabeled.size();
  out.features.resize(n + m, s.labeled.dim());
  out.features.topRows(n) = s.labeled.features;
  out.features.bottomRows(m) = s.unlabeled.features;
  out.labels = s.labeled.labels;
  const auto& oracle = *s.unlabeled.oracle_labels;
  out.labels.insert(out.labels.end(), oracle.begin(), oracle.end());
  out.class_count = s.labeled.class_count;
  return out;
}

EstimatorMetrics evaluate(const LdaModel& model, const LabeledDataset& train,
                          const LabeledDataset& test) {
  EstimatorMetrics m;
  m.train_loglik = log_likelihood(model, train, /*normalize=*/true);
  m.test_loglik = log_likelihood(model, test, /*normalize=*/true);
  m.train_error = error_rate(model, train);
  m.test_error = error_rate(model, test);
  return m;
}

const EstimatorMetrics* find_metrics(const RepetitionRecord& rec,
                                     const std::string& name) {
  for (const auto& [n, m] : rec.metrics)
    if (n == name) return &m;
  return nullptr;
}

double pick(const EstimatorMetrics& m, const std::string& metric,
            const std::string& split) {
  if (metric == "loglik")
    return split == "train" ? m.train_loglik : m.test_loglik;
  return split == "train" ? m.train_error : m.test_error;
}

}  // namespace

std::vector<std::string> EstimatorSet::names() const {
  std::vector<std::string> out{"sup"};
  if (semi) out.emplace_back("semi");
  if (opt) out.emplace_back("opt");
  if (hoc) out.emplace_back("hoc");
  if (self) out.emplace_back("self");
  return out;
}

std::uint64_t MasterSeedPlan::seed_for(int rep_index) const {
  return derive_seed(master, static_cast<std::uint64_t>(rep_index));
}

namespace {

RepetitionRecord evaluate_split_stages(
    const std::function<Split(std::string& stage)>& make_split,
    const HarnessConfig& cfg, std::uint64_t master_seed, int rep_index) {
  RepetitionRecord rec;
  rec.master_seed = master_seed;
  rec.rep_index = rep_index;
  rec.seed = MasterSeedPlan{master_seed}.seed_for(rep_index);

  std::string stage = "split";
  try {
    const Split s = make_split(stage);
    const LabeledDataset train = full_training_set(s);

    stage = "sup";
    const LdaModel sup = fit_supervised(s.labeled, cfg.wp);
    rec.metrics.emplace_back("sup", evaluate(sup, train, s.test));

    if (cfg.estimators.semi) {
      stage = "semi";
      const SolveResult r = solve(s.labeled, s.unlabeled, sup, cfg.solver,
                                  cfg.wp);
      rec.metrics.emplace_back("semi", evaluate(r.model, train, s.test));
      rec.solver = SolverStats{r.iterations, r.gain, r.converged,
                               r.supervised_fallback};
    }
    if (cfg.estimators.opt) {
      stage = "opt";
      const LdaModel opt = fit_optimal(s.labeled, s.unlabeled, cfg.wp);
      rec.metrics.emplace_back("opt", evaluate(opt, train, s.test));
    }
    if (cfg.estimators.hoc) {
      stage = "hoc";
      const ConstrainedFit hoc = fit_constrained(s.labeled, s.unlabeled,
                                                 cfg.wp);
      rec.metrics.emplace_back("hoc", evaluate(hoc.model, train, s.test));
      rec.hoc_diagnostics = hoc.diagnostics;
    }
    if (cfg.estimators.self) {
      stage = "self";
      const SelfTrainingResult st = fit_self_training(
          s.labeled, s.unlabeled, cfg.wp, cfg.self_max_rounds);
      rec.metrics.emplace_back("self", evaluate(st.model, train, s.test));
    }
    rec.ok = true;
  } catch (const Error& e) {
    rec.ok = false;
    rec.metrics.clear();
    rec.solver.reset();
    rec.hoc_diagnostics.reset();
    rec.failure_reason = stage + ": " + e.what();
  }
  return rec;
}

}  // namespace

RepetitionRecord run_repetition(const RawDataset& preprocessed,
                                const HarnessConfig& cfg,
                                std::uint64_t master_seed, int rep_index) {
  const std::uint64_t seed = MasterSeedPlan{master_seed}.seed_for(rep_index);
  return evaluate_split_stages(
      [&](std::string&) {
        SplitSpec spec = cfg.split;
        spec.seed = seed;
        return split(preprocessed, spec);
      },
      cfg, master_seed, rep_index);
}

RepetitionRecord run_repetition_train_only(const RawDataset& raw,
                                           const PreprocessOptions& pre,
                                           const HarnessConfig& cfg,
                                           std::uint64_t master_seed,
                                           int rep_index) {
  const std::uint64_t seed = MasterSeedPlan{master_seed}.seed_for(rep_index);
  return evaluate_split_stages(
      [&](std::string& stage) {
        SplitSpec spec = cfg.split;
        spec.seed = seed;
        if (spec.labeled_size == 0)
          spec.labeled_size =
              2 * static_cast<int>(raw.features.cols()) + raw.class_count;
        Split s = split(raw, spec);

        stage = "preprocess";
        RawDataset train_rows;
        const int n = s.labeled.size();
        const int m = s.unlabeled.size();
        train_rows.features.resize(n + m, raw.features.cols());
        train_rows.features.topRows(n) = s.labeled.features;
        train_rows.features.bottomRows(m) = s.unlabeled.features;
        train_rows.labels.assign(static_cast<std::size_t>(n + m), 1);
        train_rows.class_count = raw.class_count;
        const PreprocessModel model =
            fit_preprocess(train_rows, pre.retain, pre.zero_var_tol);
        s.labeled.features = apply_preprocess(model, s.labeled.features);
        s.unlabeled.features = apply_preprocess(model, s.unlabeled.features);
        s.test.features = apply_preprocess(model, s.test.features);
        return s;
      },
      cfg, master_seed, rep_index);
}

double permutation_test(const std::vector<double>& a,
                        const std::vector<double>& b, int permutations,
                        std::uint64_t seed) {
  if (a.size() != b.size())
    throw InvalidArgument("permutation_test: length mismatch");
  const std::size_t n = a.size();
  if (n < 2) throw InvalidArgument("permutation_test: need at least 2 pairs");
  if (permutations < 1)
    throw InvalidArgument("permutation_test: permutations must be >= 1");

  std::vector<double> d(n);
  double max_abs = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = a[i] - b[i];
    max_abs = std::max(max_abs, std::abs(d[i]));
  }
  const double t_obs = std::abs(std::accumulate(d.begin(), d.end(), 0.0)) /
                       static_cast<double>(n);
  // Slack so sign patterns that merely reorder the same summands still count
  // as ties.
  const double tie_tol = 1e-12 * (max_abs + 1.0);

  const bool exact = n < 63 && (std::uint64_t{1} << n) <=
                                   static_cast<std::uint64_t>(permutations);
  if (exact) {
    const std::uint64_t total = std::uint64_t{1} << n;
    std::uint64_t count = 0;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        sum += (mask >> i) & 1u ? -d[i] : d[i];
      if (std::abs(sum) / static_cast<double>(n) >= t_obs - tie_tol) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(total);
  }

  Rng rng(seed);
  std::uint64_t count = 0;
  for (int p = 0; p < permutations; ++p) {
    double sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
      std::uint64_t bits = rng.next_u64();
      for (int bit = 0; bit < 64 && i < n; ++bit, ++i)
        sum += (bits >> bit) & 1u ? -d[i] : d[i];
    }
    if (std::abs(sum) / static_cast<double>(n) >= t_obs - tie_tol) ++count;
  }
  return static_cast<double>(1 + count) / static_cast<double>(1 + permutations);
}

ExperimentReport aggregate(const std::vector<RepetitionRecord>& records,
                           int permutations) {
  if (records.empty()) throw InvalidArgument("aggregate: no records");

  std::vector<RepetitionRecord> sorted = records;
  std::sort(sorted.begin(), sorted.end(),
            [](const RepetitionRecord& x, const RepetitionRecord& y) {
              return x.rep_index < y.rep_index;
            });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].rep_index == sorted[i - 1].rep_index)
      throw InvalidArgument("aggregate: duplicate repetition index " +
                            std::to_string(sorted[i].rep_index));
    if (sorted[i].master_seed != sorted[0].master_seed)
      throw InvalidArgument("aggregate: records from different master seeds");
  }

  ExperimentReport report;
  report.master_seed = sorted[0].master_seed;
  report.repetitions = static_cast<int>(sorted.size());
  report.permutations = permutations;

  std::vector<const RepetitionRecord*> good;
  for (const auto& r : sorted) {
    if (r.ok) {
      good.push_back(&r);
    } else {
      report.failures.emplace_back(r.rep_index, r.failure_reason);
    }
  }
  report.successful = static_cast<int>(good.size());
  if (good.empty()) throw Error("aggregate: zero successful repetitions");

  report.estimators.reserve(good.front()->metrics.size());
  for (const auto& [name, m] : good.front()->metrics)
    report.estimators.push_back(name);
  for (const auto* r : good) {
    if (r->metrics.size() != report.estimators.size())
      throw InvalidArgument("aggregate: inconsistent estimator sets");
    for (std::size_t i = 0; i < r->metrics.size(); ++i)
      if (r->metrics[i].first != report.estimators[i])
        throw InvalidArgument("aggregate: inconsistent estimator sets");
  }
  const auto enabled = [&](const std::string& name) {
    return std::find(report.estimators.begin(), report.estimators.end(),
                     name) != report.estimators.end();
  };

  const double count = static_cast<double>(good.size());
  for (const auto& name : report.estimators) {
    EstimatorMetrics mean;
    for (const auto* r : good) {
      const EstimatorMetrics* m = find_metrics(*r, name);
      mean.train_loglik += m->train_loglik;
      mean.test_loglik += m->test_loglik;
      mean.train_error += m->train_error;
      mean.test_error += m->test_error;
    }
    mean.train_loglik /= count;
    mean.test_loglik /= count;
    mean.train_error /= count;
    mean.test_error /= count;
    report.means.emplace_back(name, mean);
  }

  const std::pair<std::string, std::string> win_pairs[] = {
      {"semi", "sup"}, {"opt", "semi"}, {"hoc", "sup"}, {"semi", "hoc"}};
  for (const auto& [a, b] : win_pairs) {
    if (!enabled(a) || !enabled(b)) continue;
    PairWins w;
    w.a = a;
    w.b = b;
    for (const auto* r : good) {
      const EstimatorMetrics* ma = find_metrics(*r, a);
      const EstimatorMetrics* mb = find_metrics(*r, b);
      if (ma->train_loglik > mb->train_loglik) w.train_loglik += 1.0;
      if (ma->test_loglik > mb->test_loglik) w.test_loglik += 1.0;
      if (ma->train_error < mb->train_error) w.train_error += 1.0;
      if (ma->test_error < mb->test_error) w.test_error += 1.0;
    }
    w.train_loglik *= 100.0 / count;
    w.test_loglik *= 100.0 / count;
    w.train_error *= 100.0 / count;
    w.test_error *= 100.0 / count;
    report.win_rates.push_back(std::move(w));
  }

  if (enabled("semi") && enabled("opt")) {
    auto mean_of = [&](const std::string& name) -> const EstimatorMetrics& {
      for (const auto& [n, m] : report.means)
        if (n == name) return m;
      throw Error("aggregate: estimator missing from means");
    };
    const EstimatorMetrics& sup = mean_of("sup");
    const EstimatorMetrics& semi = mean_of("semi");
    const EstimatorMetrics& opt = mean_of("opt");
    auto ratio = [](double num, double den) {
      return den == 0.0 ? std::numeric_limits<double>::quiet_NaN() : num / den;
    };
    RelativeImprovement ri;
    ri.train_loglik = ratio(semi.train_loglik - sup.train_loglik,
                            opt.train_loglik - sup.train_loglik);
    ri.test_loglik = ratio(semi.test_loglik - sup.test_loglik,
                           opt.test_loglik - sup.test_loglik);
    ri.train_error = ratio(semi.train_error - sup.train_error,
                           opt.train_error - sup.train_error);
    ri.test_error = ratio(semi.test_error - sup.test_error,
                          opt.test_error - sup.test_error);
    report.relative_improvement = ri;
  }

  if (good.size() >= 2) {
    for (std::size_t i = 0; i < report.estimators.size(); ++i) {
      for (std::size_t j = i + 1; j < report.estimators.size(); ++j) {
        const std::string& a = report.estimators[i];
        const std::string& b = report.estimators[j];
        for (const char* metric : {"loglik", "error"}) {
          for (const char* split : {"train", "test"}) {
            std::vector<double> va, vb;
            va.reserve(good.size());
            vb.reserve(good.size());
            for (const auto* r : good) {
              va.push_back(pick(*find_metrics(*r, a), metric, split));
              vb.push_back(pick(*find_metrics(*r, b), metric, split));
            }
            const std::string tag =
                std::string("perm:") + metric + ":" + split + ":" + a + ":" + b;
            PairPValue entry;
            entry.a = a;
            entry.b = b;
            entry.metric = metric;
            entry.split = split;
            entry.p = permutation_test(
                va, vb, permutations,
                derive_stream_seed(report.master_seed, tag.c_str()));
            report.p_values.push_back(std::move(entry));
          }
        }
      }
    }
  }

  if (enabled("semi")) {
    double iters = 0.0, gain = 0.0;
    for (const auto* r : good) {
      iters += r->solver->iterations;
      gain += r->solver->gain;
    }
    report.mean_solver_iterations = iters / count;
    report.mean_gain = gain / count;
  }
  if (enabled("hoc")) {
    for (const auto* r : good)
      if (r->hoc_diagnostics && r->hoc_diagnostics->pd_projected)
        ++report.hoc_pd_projections;
  }
  return report;
}

}  // namespace mcpl
