#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcpl/dataset.hpp"
#include "mcpl/harness.hpp"
#include "mcpl/lda.hpp"
#include "mcpl/solver.hpp"

namespace mcpl {

// Versioned JSON documents. Readers check the format tag and version.

nlohmann::json to_json(const PreprocessModel& model);
PreprocessModel preprocess_from_json(const nlohmann::json& j);

nlohmann::json to_json(const LdaModel& model);
LdaModel lda_model_from_json(const nlohmann::json& j);

/// Soft labels larger than q_elide_entries are dropped from the document
/// (flagged with "q_elided": true).
nlohmann::json to_json(const SolveResult& result, int q_elide_entries = 10000);

nlohmann::json to_json(const RepetitionRecord& record);
RepetitionRecord record_from_json(const nlohmann::json& j);

nlohmann::json to_json(const ExperimentReport& report);

/// Flat table: kind,name,split,metric,value. One row per estimator-split
/// metric plus the aggregate comparisons.
std::string report_csv(const ExperimentReport& report);

/// JSON-lines stream: an optional header object carrying the resolved run
/// configuration, then one record per line.
void write_records_jsonl(const std::filesystem::path& path,
                         const std::optional<nlohmann::json>& header,
                         const std::vector<RepetitionRecord>& records);

struct RecordsFile {
  std::optional<nlohmann::json> header;
  std::vector<RepetitionRecord> records;
};

/// Reads and concatenates record streams. Headers, when present in several
/// files, must agree.
RecordsFile read_records_jsonl(const std::vector<std::filesystem::path>& paths);

/// Shortest round-trip decimal rendering (used for CSV output).
std::string format_double(double v);

}  // namespace mcpl
