#include "mcpl/serialize.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "mcpl/errors.hpp"

namespace mcpl {

namespace {

using nlohmann::json;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  j["data"] = std::move(data);
  return j;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw ParseError("matrix: data length does not match rows*cols");
  Eigen::MatrixXd m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[i++];
  return m;
}

std::vector<double> vector_to_std(const Eigen::VectorXd& v) {
  return {v.data(), v.data() + v.size()};
}

Eigen::VectorXd vector_from_std(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(),
                                           static_cast<Eigen::Index>(v.size()));
}

void check_format(const json& j, const char* format) {
  if (j.value("format", "") != format)
    throw ParseError(std::string("expected document format \"") + format +
                     "\"");
  if (j.value("version", 0) != 1)
    throw ParseError(std::string(format) + ": unsupported version");
}

json metrics_to_json(const EstimatorMetrics& m) {
  return json{{"train_loglik", m.train_loglik},
              {"test_loglik", m.test_loglik},
              {"train_error", m.train_error},
              {"test_error", m.test_error}};
}

EstimatorMetrics metrics_from_json(const json& j) {
  EstimatorMetrics m;
  m.train_loglik = j.at("train_loglik").get<double>();
  m.test_loglik = j.at("test_loglik").get<double>();
  m.train_error = j.at("train_error").get<double>();
  m.test_error = j.at("test_error").get<double>();
  return m;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, ptr);
}

json to_json(const PreprocessModel& model) {
  json j;
  j["format"] = "mcpl.preprocess";
  j["version"] = 1;
  j["kept"] = model.kept;
  j["scales"] = vector_to_std(model.scales);
  j["center"] = vector_to_std(model.center);
  j["basis"] = matrix_to_json(model.basis);
  j["retain"] = model.retain;
  j["retained_variance"] = model.retained_variance;
  return j;
}

PreprocessModel preprocess_from_json(const json& j) {
  check_format(j, "mcpl.preprocess");
  PreprocessModel model;
  model.kept = j.at("kept").get<std::vector<std::uint8_t>>();
  model.scales = vector_from_std(j.at("scales").get<std::vector<double>>());
  model.center = vector_from_std(j.at("center").get<std::vector<double>>());
  model.basis = matrix_from_json(j.at("basis"));
  model.retain = j.at("retain").get<double>();
  model.retained_variance = j.at("retained_variance").get<double>();
  return model;
}

json to_json(const LdaModel& model) {
  json j;
  j["format"] = "mcpl.lda_model";
  j["version"] = 1;
  j["priors"] = vector_to_std(model.priors);
  j["means"] = matrix_to_json(model.means);
  j["covariance"] = matrix_to_json(model.covariance);
  return j;
}

LdaModel lda_model_from_json(const json& j) {
  check_format(j, "mcpl.lda_model");
  LdaModel model;
  model.priors = vector_from_std(j.at("priors").get<std::vector<double>>());
  model.means = matrix_from_json(j.at("means"));
  model.covariance = matrix_from_json(j.at("covariance"));
  return model;
}

json to_json(const SolveResult& result, int q_elide_entries) {
  json j;
  j["format"] = "mcpl.solve_result";
  j["version"] = 1;
  j["model"] = to_json(result.model);
  j["gain"] = result.gain;
  j["iterations"] = result.iterations;
  j["converged"] = result.converged;
  j["supervised_fallback"] = result.supervised_fallback;
  if (result.q.weights.size() <= q_elide_entries) {
    j["q"] = matrix_to_json(result.q.weights);
  } else {
    j["q_elided"] = true;
  }
  if (!result.trace.empty()) j["trace"] = result.trace;
  return j;
}

json to_json(const RepetitionRecord& record) {
  json j;
  j["rep"] = record.rep_index;
  j["seed"] = record.seed;
  j["master_seed"] = record.master_seed;
  j["ok"] = record.ok;
  if (!record.ok) {
    j["reason"] = record.failure_reason;
    return j;
  }
  json metrics = json::object();
  for (const auto& [name, m] : record.metrics) metrics[name] = metrics_to_json(m);
  j["metrics"] = std::move(metrics);
  // Preserve the canonical estimator ordering (JSON objects sort keys).
  std::vector<std::string> order;
  for (const auto& [name, m] : record.metrics) order.push_back(name);
  j["estimators"] = std::move(order);
  if (record.solver) {
    j["solver"] = json{{"iterations", record.solver->iterations},
                       {"gain", record.solver->gain},
                       {"converged", record.solver->converged},
                       {"supervised_fallback", record.solver->supervised_fallback}};
  }
  if (record.hoc_diagnostics) {
    const auto& d = *record.hoc_diagnostics;
    j["hoc_diagnostics"] = json{{"mean_residual_pre", d.mean_residual_pre},
                                {"mean_residual_post", d.mean_residual_post},
                                {"covariance_residual", d.covariance_residual},
                                {"pd_projected", d.pd_projected}};
  }
  return j;
}

RepetitionRecord record_from_json(const json& j) {
  RepetitionRecord rec;
  rec.rep_index = j.at("rep").get<int>();
  rec.seed = j.at("seed").get<std::uint64_t>();
  rec.master_seed = j.at("master_seed").get<std::uint64_t>();
  rec.ok = j.at("ok").get<bool>();
  if (!rec.ok) {
    rec.failure_reason = j.value("reason", "");
    return rec;
  }
  const auto order = j.at("estimators").get<std::vector<std::string>>();
  const json& metrics = j.at("metrics");
  for (const auto& name : order)
    rec.metrics.emplace_back(name, metrics_from_json(metrics.at(name)));
  if (j.contains("solver")) {
    const json& s = j.at("solver");
    SolverStats stats;
    stats.iterations = s.at("iterations").get<int>();
    stats.gain = s.at("gain").get<double>();
    stats.converged = s.at("converged").get<bool>();
    stats.supervised_fallback = s.value("supervised_fallback", false);
    rec.solver = stats;
  }
  if (j.contains("hoc_diagnostics")) {
    const json& d = j.at("hoc_diagnostics");
    ConstrainedFitDiagnostics diag;
    diag.mean_residual_pre = d.at("mean_residual_pre").get<double>();
    diag.mean_residual_post = d.at("mean_residual_post").get<double>();
    diag.covariance_residual = d.at("covariance_residual").get<double>();
    diag.pd_projected = d.at("pd_projected").get<bool>();
    rec.hoc_diagnostics = diag;
  }
  return rec;
}

json to_json(const ExperimentReport& report) {
  json j;
  j["format"] = "mcpl.report";
  j["version"] = 1;
  j["master_seed"] = report.master_seed;
  j["repetitions"] = report.repetitions;
  j["successful"] = report.successful;
  json failures = json::array();
  for (const auto& [rep, reason] : report.failures)
    failures.push_back(json{{"rep", rep}, {"reason", reason}});
  j["failures"] = std::move(failures);
  j["estimators"] = report.estimators;
  json means = json::object();
  for (const auto& [name, m] : report.means) means[name] = metrics_to_json(m);
  j["means"] = std::move(means);
  json wins = json::array();
  for (const auto& w : report.win_rates) {
    wins.push_back(json{{"a", w.a},
                        {"b", w.b},
                        {"train_loglik", w.train_loglik},
                        {"test_loglik", w.test_loglik},
                        {"train_error", w.train_error},
                        {"test_error", w.test_error}});
  }
  j["win_rates"] = std::move(wins);
  if (report.relative_improvement) {
    const auto& r = *report.relative_improvement;
    j["relative_improvement"] = json{{"train_loglik", r.train_loglik},
                                     {"test_loglik", r.test_loglik},
                                     {"train_error", r.train_error},
                                     {"test_error", r.test_error}};
  }
  json pvals = json::array();
  for (const auto& p : report.p_values) {
    pvals.push_back(json{{"a", p.a},
                         {"b", p.b},
                         {"metric", p.metric},
                         {"split", p.split},
                         {"p", p.p}});
  }
  j["p_values"] = std::move(pvals);
  j["permutations"] = report.permutations;
  if (report.mean_solver_iterations)
    j["mean_solver_iterations"] = *report.mean_solver_iterations;
  if (report.mean_gain) j["mean_gain"] = *report.mean_gain;
  j["hoc_pd_projections"] = report.hoc_pd_projections;
  return j;
}

std::string report_csv(const ExperimentReport& report) {
  std::string out = "kind,name,split,metric,value\n";
  auto row = [&out](const std::string& kind, const std::string& name,
                    const std::string& split, const std::string& metric,
                    double value) {
    out += kind + "," + name + "," + split + "," + metric + "," +
           format_double(value) + "\n";
  };
  for (const auto& [name, m] : report.means) {
    row("mean", name, "train", "loglik", m.train_loglik);
    row("mean", name, "test", "loglik", m.test_loglik);
    row("mean", name, "train", "error", m.train_error);
    row("mean", name, "test", "error", m.test_error);
  }
  for (const auto& w : report.win_rates) {
    const std::string name = w.a + ">" + w.b;
    row("win_rate", name, "train", "loglik", w.train_loglik);
    row("win_rate", name, "test", "loglik", w.test_loglik);
    row("win_rate", name, "train", "error", w.train_error);
    row("win_rate", name, "test", "error", w.test_error);
  }
  if (report.relative_improvement) {
    const auto& r = *report.relative_improvement;
    row("relative_improvement", "semi_vs_opt", "train", "loglik",
        r.train_loglik);
    row("relative_improvement", "semi_vs_opt", "test", "loglik", r.test_loglik);
    row("relative_improvement", "semi_vs_opt", "train", "error", r.train_error);
    row("relative_improvement", "semi_vs_opt", "test", "error", r.test_error);
  }
  for (const auto& p : report.p_values)
    row("p_value", p.a + "_vs_" + p.b, p.split, p.metric, p.p);
  out += "count,repetitions,,," + std::to_string(report.repetitions) + "\n";
  out += "count,successful,,," + std::to_string(report.successful) + "\n";
  return out;
}

void write_records_jsonl(const std::filesystem::path& path,
                         const std::optional<json>& header,
                         const std::vector<RepetitionRecord>& records) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  if (header) {
    json h;
    h["format"] = "mcpl.records";
    h["version"] = 1;
    h["config"] = *header;
    out << h.dump() << "\n";
  }
  for (const auto& rec : records) out << to_json(rec).dump() << "\n";
}

RecordsFile read_records_jsonl(
    const std::vector<std::filesystem::path>& paths) {
  RecordsFile out;
  for (const auto& path : paths) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception& e) {
        throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " +
                         e.what());
      }
      if (j.contains("format")) {
        check_format(j, "mcpl.records");
        const json& config = j.at("config");
        if (out.header && *out.header != config)
          throw ParseError(path.string() +
                           ": header disagrees with an earlier file");
        out.header = config;
        continue;
      }
      try {
        out.records.push_back(record_from_json(j));
      } catch (const json::exception& e) {
        throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " +
                         e.what());
      }
    }
  }
  if (out.records.empty())
    throw ParseError("no records found in the given file(s)");
  return out;
}

}  // namespace mcpl
