#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "sugar/entropy.hpp"
#include "sugar/error.hpp"
#include "sugar/eval.hpp"
#include "sugar/generator.hpp"
#include "sugar/orchestrator.hpp"
#include "sugar/retriever.hpp"
#include "sugar/router.hpp"

namespace sugar {

// JSON mappings. Field names follow the domain types.

nlohmann::json to_json(const AnswerSample& s);
AnswerSample answer_sample_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Document& d);
Document document_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Clustering& c);
Clustering clustering_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EntropyReport& r);
EntropyReport entropy_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Thresholds& t);
nlohmann::json to_json(const RetrievalDecision& d);
RetrievalDecision retrieval_decision_from_json(const nlohmann::json& j);
nlohmann::json to_json(const PipelineResult& r);
PipelineResult pipeline_result_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EvalRecord& r);
EvalRecord eval_record_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EvalReport& r);
EvalReport eval_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const CalibrationRecord& r);
CalibrationRecord calibration_record_from_json(const nlohmann::json& j);

/// Calls `on_line(value, line_number)` for each non-blank line. Parse errors
/// throw malformed_record with the 1-based line number.
void for_each_jsonl(std::string_view text, const std::function<void(const nlohmann::json&, std::size_t)>& on_line);

/// Reads a whole file; throws `missing` when it cannot be opened.
std::string read_file(const std::filesystem::path& path, Errc missing);
void write_file(const std::filesystem::path& path, std::string_view contents);

std::string to_jsonl(std::span<const nlohmann::json> values);

std::vector<CalibrationRecord> load_calibration_records(const std::filesystem::path& path);

}  // namespace sugar
