// Command-line front end: fit one model set, run the benchmark protocol over
// many repetitions, or re-aggregate persisted records.

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "mcpl/errors.hpp"
#include "mcpl/harness.hpp"
#include "mcpl/serialize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct RunOptions {
  std::string data;
  std::string label_col;
  std::string leak_mode = "paper";
  double retain = 0.999;
  double zero_var_tol = 1e-12;
  int labeled_size = 0; // 0 = auto (2d + K)
  double unlabeled_fraction = 0.5;
  double alpha0 = 1.0;
  int max_iters = 1000;
  double tol = 1e-6;
  std::string q_init = "uniform";
  std::vector<std::string> estimators{"semi", "opt", "hoc"};
  int self_max_rounds = 50;
  std::uint64_t seed = 1;
  int permutations = 10000;
  std::string out;
  int reps = 100;
  int rep_start = 0;
  int jobs = 1;
  std::vector<std::string> formats{"json", "csv", "jsonl"};
  bool trace = false;
};

void add_common_options(CLI::App& cmd, RunOptions& opt) {
  cmd.add_option("--data", opt.data, "CSV data file")->required();
  cmd.add_option("--label-col", opt.label_col,
                 "label column: header name or 0-based index (default: last)");
  cmd.add_option("--leak-mode", opt.leak_mode,
                 "preprocessing fit: 'paper' (full data, replication) or "
                 "'train-only'")
      ->check(CLI::IsMember({"paper", "train-only"}));
  cmd.add_option("--retain", opt.retain, "PCA retained-variance fraction")
      ->check(CLI::Range(1e-6, 1.0));
  cmd.add_option("--zero-var-tol", opt.zero_var_tol,
                 "relative variance threshold for dropping features");
  cmd.add_option("--labeled-size", opt.labeled_size,
                 "labeled training points (0 = 2d + K)");
  cmd.add_option("--unlabeled-fraction", opt.unlabeled_fraction,
                 "fraction of the remainder used as unlabeled data");
  cmd.add_option("--alpha0", opt.alpha0, "base step size (step = alpha0/t)");
  cmd.add_option("--max-iters", opt.max_iters, "solver iteration cap");
  cmd.add_option("--tol", opt.tol, "solver objective tolerance");
  cmd.add_option("--q-init", opt.q_init, "soft-label initialization")
      ->check(CLI::IsMember({"uniform", "posteriors"}));
  cmd.add_option("--estimators", opt.estimators,
                 "estimators beyond 'sup': semi, opt, hoc, self")
      ->delimiter(',');
  cmd.add_option("--self-max-rounds", opt.self_max_rounds,
                 "self-training round cap");
  cmd.add_option("--seed", opt.seed, "master seed");
  cmd.add_option("--permutations", opt.permutations,
                 "permutation count for the paired tests");
  const char* env_out = std::getenv("MCPL_OUT_DIR");
  opt.out = env_out != nullptr ? env_out : "mcpl_out";
  cmd.add_option("--out", opt.out,
                 "output directory (default: $MCPL_OUT_DIR or ./mcpl_out)");
  // Unmatched options (notably --config) flow up to the main app.
  cmd.fallthrough();
}

mcpl::EstimatorSet parse_estimators(const std::vector<std::string>& names) {
  mcpl::EstimatorSet set;
  set.semi = set.opt = set.hoc = set.self = false;
  for (const auto& name : names) {
    if (name == "semi") set.semi = true;
    else if (name == "opt") set.opt = true;
    else if (name == "hoc") set.hoc = true;
    else if (name == "self") set.self = true;
    else if (name == "sup") continue; // always on
    else throw mcpl::InvalidArgument("unknown estimator: " + name);
  }
  return set;
}

mcpl::HarnessConfig harness_config(const RunOptions& opt) {
  mcpl::HarnessConfig cfg;
  cfg.split.labeled_size = opt.labeled_size;
  cfg.split.unlabeled_fraction = opt.unlabeled_fraction;
  cfg.solver.max_iters = opt.max_iters;
  cfg.solver.objective_tol = opt.tol;
  cfg.solver.step_base = opt.alpha0;
  cfg.solver.q_init = opt.q_init == "posteriors"
                          ? mcpl::SolverConfig::QInit::kSupervisedPosteriors
                          : mcpl::SolverConfig::QInit::kUniform;
  cfg.estimators = parse_estimators(opt.estimators);
  cfg.self_max_rounds = opt.self_max_rounds;
  return cfg;
}

/// The canonical, order-independent part of the configuration embedded in
/// reports and record headers. Execution details (reps, jobs, output paths)
/// stay out so partial runs of one study share a header.
json canonical_config(const RunOptions& opt) {
  json j;
  j["data"] = opt.data;
  j["label_col"] = opt.label_col;
  j["leak_mode"] = opt.leak_mode;
  j["retain"] = opt.retain;
  j["zero_var_tol"] = opt.zero_var_tol;
  j["labeled_size"] = opt.labeled_size;
  j["unlabeled_fraction"] = opt.unlabeled_fraction;
  j["alpha0"] = opt.alpha0;
  j["max_iters"] = opt.max_iters;
  j["tol"] = opt.tol;
  j["q_init"] = opt.q_init;
  j["estimators"] = parse_estimators(opt.estimators).names();
  j["self_max_rounds"] = opt.self_max_rounds;
  j["master_seed"] = opt.seed;
  j["permutations"] = opt.permutations;
  return j;
}

mcpl::RawDataset load_and_validate(const RunOptions& opt) {
  if (!fs::exists(opt.data))
    throw mcpl::InvalidArgument("data file not found: " + opt.data);
  return mcpl::load_csv(opt.data, opt.label_col);
}

std::vector<mcpl::RepetitionRecord> run_benchmark(const mcpl::RawDataset& raw,
                                                  const RunOptions& opt) {
  const mcpl::HarnessConfig cfg = harness_config(opt);
  const bool paper_mode = opt.leak_mode == "paper";
  mcpl::RawDataset prepared;
  if (paper_mode) {
    const mcpl::PreprocessModel pre =
        mcpl::fit_preprocess(raw, opt.retain, opt.zero_var_tol);
    prepared = mcpl::with_features(
        raw, mcpl::apply_preprocess(pre, raw.features));
  }

  std::vector<mcpl::RepetitionRecord> records(
      static_cast<std::size_t>(opt.reps));
  const int jobs = std::max(1, opt.jobs);
  std::atomic<int> next{0};
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
  for (int w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (;;) {
          const int i = next.fetch_add(1);
          if (i >= opt.reps) break;
          const int rep = opt.rep_start + i;
          records[static_cast<std::size_t>(i)] =
              paper_mode
                  ? mcpl::run_repetition(prepared, cfg, opt.seed, rep)
                  : mcpl::run_repetition_train_only(
                        raw, {opt.retain, opt.zero_var_tol}, cfg, opt.seed,
                        rep);
        }
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return records;
}

void write_text(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw mcpl::Error("cannot write " + path.string());
  out << content;
}

void print_report_summary(const mcpl::ExperimentReport& report) {
  auto line = [](const std::string& name, const mcpl::EstimatorMetrics& m) {
    std::printf("  %-5s %14.6g %14.6g %12.4f %12.4f\n", name.c_str(),
                m.train_loglik, m.test_loglik, m.train_error, m.test_error);
  };
  std::printf("repetitions: %d (successful %d)   master seed: %llu\n",
              report.repetitions, report.successful,
              static_cast<unsigned long long>(report.master_seed));
  std::printf("  %-5s %14s %14s %12s %12s\n", "est.", "train loglik",
              "test loglik", "train err", "test err");
  for (const auto& [name, m] : report.means) line(name, m);
  for (const auto& w : report.win_rates) {
    std::printf("  wins %s>%s  train LL %.1f%%  test LL %.1f%%  train err "
                "%.1f%%  test err %.1f%%\n",
                w.a.c_str(), w.b.c_str(), w.train_loglik, w.test_loglik,
                w.train_error, w.test_error);
  }
  if (report.relative_improvement) {
    const auto& r = *report.relative_improvement;
    std::printf("  relative improvement (semi vs opt): train LL %.3f, test "
                "LL %.3f, train err %.3f, test err %.3f\n",
                r.train_loglik, r.test_loglik, r.train_error, r.test_error);
  }
  if (report.mean_gain)
    std::printf("  mean solver gain %.6g over %.1f iterations\n",
                *report.mean_gain,
                report.mean_solver_iterations.value_or(0.0));
}

int cmd_fit(const RunOptions& opt) {
  const mcpl::RawDataset raw = load_and_validate(opt);
  const mcpl::HarnessConfig base = harness_config(opt);

  mcpl::SolverConfig solver_cfg = base.solver;
  solver_cfg.record_trace = opt.trace;

  mcpl::RawDataset prepared;
  mcpl::PreprocessModel pre;
  mcpl::Split split;
  const std::uint64_t rep_seed = mcpl::MasterSeedPlan{opt.seed}.seed_for(0);
  if (opt.leak_mode == "paper") {
    pre = mcpl::fit_preprocess(raw, opt.retain, opt.zero_var_tol);
    prepared = mcpl::with_features(raw,
                                   mcpl::apply_preprocess(pre, raw.features));
    mcpl::SplitSpec spec = base.split;
    spec.seed = rep_seed;
    split = mcpl::split(prepared, spec);
  } else {
    mcpl::SplitSpec spec = base.split;
    spec.seed = rep_seed;
    if (spec.labeled_size == 0)
      spec.labeled_size =
          2 * static_cast<int>(raw.features.cols()) + raw.class_count;
    split = mcpl::split(raw, spec);
    mcpl::RawDataset train_rows;
    const auto n_lab = split.labeled.size();
    const auto m = split.unlabeled.size();
    train_rows.features.resize(n_lab + m, raw.features.cols());
    train_rows.features.topRows(n_lab) = split.labeled.features;
    train_rows.features.bottomRows(m) = split.unlabeled.features;
    train_rows.labels.assign(static_cast<std::size_t>(n_lab + m), 1);
    train_rows.class_count = raw.class_count;
    pre = mcpl::fit_preprocess(train_rows, opt.retain, opt.zero_var_tol);
    split.labeled.features = mcpl::apply_preprocess(pre, split.labeled.features);
    split.unlabeled.features =
        mcpl::apply_preprocess(pre, split.unlabeled.features);
    split.test.features = mcpl::apply_preprocess(pre, split.test.features);
  }

  fs::create_directories(opt.out);
  const fs::path out_dir = opt.out;

  json metrics;
  metrics["format"] = "mcpl.fit_metrics";
  metrics["version"] = 1;
  metrics["config"] = canonical_config(opt);
  metrics["split"] = json{{"labeled", split.labeled.size()},
                          {"unlabeled", split.unlabeled.size()},
                          {"test", split.test.size()},
                          {"dim", split.labeled.dim()}};

  mcpl::LabeledDataset train = split.labeled;
  {
    const int n = split.labeled.size(), m = split.unlabeled.size();
    train.features.conservativeResize(n + m, split.labeled.dim());
    train.features.bottomRows(m) = split.unlabeled.features;
    const auto& oracle = *split.unlabeled.oracle_labels;
    train.labels.insert(train.labels.end(), oracle.begin(), oracle.end());
  }
  auto eval_to_json = [&](const mcpl::LdaModel& model) {
    return json{{"train_loglik", mcpl::log_likelihood(model, train, true)},
                {"test_loglik", mcpl::log_likelihood(model, split.test, true)},
                {"train_error", mcpl::error_rate(model, train)},
                {"test_error", mcpl::error_rate(model, split.test)}};
  };

  write_text(out_dir / "preprocess.json", mcpl::to_json(pre).dump(2) + "\n");

  const mcpl::LdaModel sup = mcpl::fit_supervised(split.labeled, base.wp);
  write_text(out_dir / "model_sup.json", mcpl::to_json(sup).dump(2) + "\n");
  metrics["metrics"]["sup"] = eval_to_json(sup);

  if (base.estimators.semi) {
    const mcpl::SolveResult r =
        mcpl::solve(split.labeled, split.unlabeled, sup, solver_cfg, base.wp);
    write_text(out_dir / "model_semi.json",
               mcpl::to_json(r, /*q_elide_entries=*/100000).dump(2) + "\n");
    metrics["metrics"]["semi"] = eval_to_json(r.model);
    metrics["solver"] = json{{"gain", r.gain},
                             {"iterations", r.iterations},
                             {"converged", r.converged},
                             {"supervised_fallback", r.supervised_fallback}};
    std::printf("gain: %.9g  (iterations %d%s)\n", r.gain, r.iterations,
                r.converged ? ", converged" : "");
  }
  if (base.estimators.opt) {
    const mcpl::LdaModel opt_model =
        mcpl::fit_optimal(split.labeled, split.unlabeled, base.wp);
    write_text(out_dir / "model_opt.json",
               mcpl::to_json(opt_model).dump(2) + "\n");
    metrics["metrics"]["opt"] = eval_to_json(opt_model);
  }
  if (base.estimators.hoc) {
    const mcpl::ConstrainedFit hoc =
        mcpl::fit_constrained(split.labeled, split.unlabeled, base.wp);
    write_text(out_dir / "model_hoc.json",
               mcpl::to_json(hoc.model).dump(2) + "\n");
    metrics["metrics"]["hoc"] = eval_to_json(hoc.model);
    metrics["hoc_diagnostics"] =
        json{{"mean_residual_pre", hoc.diagnostics.mean_residual_pre},
             {"mean_residual_post", hoc.diagnostics.mean_residual_post},
             {"covariance_residual", hoc.diagnostics.covariance_residual},
             {"pd_projected", hoc.diagnostics.pd_projected}};
  }
  if (base.estimators.self) {
    const mcpl::SelfTrainingResult st = mcpl::fit_self_training(
        split.labeled, split.unlabeled, base.wp, base.self_max_rounds);
    write_text(out_dir / "model_self.json",
               mcpl::to_json(st.model).dump(2) + "\n");
    metrics["metrics"]["self"] = eval_to_json(st.model);
  }

  write_text(out_dir / "metrics.json", metrics.dump(2) + "\n");
  for (const auto& [name, m] : metrics["metrics"].items()) {
    std::printf("%-5s train loglik %14.6g   test loglik %14.6g   train err "
                "%.4f   test err %.4f\n",
                name.c_str(), m["train_loglik"].get<double>(),
                m["test_loglik"].get<double>(), m["train_error"].get<double>(),
                m["test_error"].get<double>());
  }
  return kExitOk;
}

int cmd_benchmark(const RunOptions& opt) {
  if (opt.reps < 1)
    throw mcpl::InvalidArgument("benchmark: --reps must be >= 1");
  const mcpl::RawDataset raw = load_and_validate(opt);
  const auto records = run_benchmark(raw, opt);
  const mcpl::ExperimentReport report =
      mcpl::aggregate(records, opt.permutations);

  fs::create_directories(opt.out);
  const fs::path out_dir = opt.out;
  const json config = canonical_config(opt);

  auto wants = [&](const std::string& fmt) {
    return std::find(opt.formats.begin(), opt.formats.end(), fmt) !=
           opt.formats.end();
  };
  if (wants("json")) {
    json j = mcpl::to_json(report);
    j["config"] = config;
    write_text(out_dir / "report.json", j.dump(2) + "\n");
  }
  if (wants("csv"))
    write_text(out_dir / "report.csv", mcpl::report_csv(report));
  if (wants("jsonl"))
    mcpl::write_records_jsonl(out_dir / "records.jsonl", config, records);

  print_report_summary(report);
  return kExitOk;
}

int cmd_report(const std::vector<std::string>& record_paths,
               std::optional<int> permutations_override,
               const std::string& out) {
  std::vector<fs::path> paths(record_paths.begin(), record_paths.end());
  const mcpl::RecordsFile records = mcpl::read_records_jsonl(paths);
  int permutations = 10000;
  if (records.header && records.header->contains("permutations"))
    permutations = (*records.header)["permutations"].get<int>();
  if (permutations_override) permutations = *permutations_override;

  const mcpl::ExperimentReport report =
      mcpl::aggregate(records.records, permutations);

  fs::create_directories(out);
  json j = mcpl::to_json(report);
  if (records.header) j["config"] = *records.header;
  write_text(fs::path(out) / "report.json", j.dump(2) + "\n");
  write_text(fs::path(out) / "report.csv", mcpl::report_csv(report));
  print_report_summary(report);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-supervised LDA via contrastive pessimistic likelihood "
               "estimation"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "key=value file with [fit]/[benchmark] sections; "
                 "command-line flags override");

  RunOptions fit_opt, bench_opt;
  CLI::App* fit = app.add_subcommand("fit", "one split, fit and serialize "
                                            "all enabled estimators");
  add_common_options(*fit, fit_opt);
  fit->add_flag("--trace", fit_opt.trace, "record the per-iteration "
                                          "objective in the solver output");

  CLI::App* bench = app.add_subcommand(
      "benchmark", "repeated splits, aggregate metrics and paired tests");
  add_common_options(*bench, bench_opt);
  bench->add_option("--reps", bench_opt.reps, "number of repetitions");
  bench->add_option("--rep-start", bench_opt.rep_start,
                    "first repetition index (for partial runs)");
  bench->add_option("--jobs", bench_opt.jobs,
                    "worker threads (output is identical for any value)");
  bench->add_option("--formats", bench_opt.formats,
                    "outputs to write: json, csv, jsonl")
      ->delimiter(',');

  std::vector<std::string> record_paths;
  std::optional<int> perm_override;
  std::string report_out;
  CLI::App* rep = app.add_subcommand(
      "report", "re-aggregate persisted records without refitting");
  rep->add_option("records", record_paths, "records.jsonl file(s)")
      ->required();
  int perm_value = -1;
  rep->add_option("--permutations", perm_value,
                  "override the permutation count");
  const char* env_out = std::getenv("MCPL_OUT_DIR");
  report_out = env_out != nullptr ? env_out : "mcpl_out";
  rep->add_option("--out", report_out, "output directory");
  rep->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (fit->parsed()) return cmd_fit(fit_opt);
    if (bench->parsed()) return cmd_benchmark(bench_opt);
    if (perm_value >= 0) perm_override = perm_value;
    return cmd_report(record_paths, perm_override, report_out);
  } catch (const mcpl::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const mcpl::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}
