#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sugar/generator.hpp"
#include "sugar/orchestrator.hpp"

namespace sugar {

// Per-prediction QA metrics. All throw no_gold_answers on an empty gold list.

int exact_match(const std::string& prediction, std::span<const std::string> gold_answers);
/// Max over golds of token-level F1 with multiset overlap.
double f1(const std::string& prediction, std::span<const std::string> gold_answers);
/// 1 iff some normalized gold occurs as a contiguous token run of the
/// normalized prediction.
int accuracy(const std::string& prediction, std::span<const std::string> gold_answers);

struct EvalRecord {
  std::string question_id;
  std::string prediction;
  std::vector<std::string> gold_answers;
  int em = 0;
  double f1 = 0.0;
  int acc = 0;
  RetrievalMode mode = RetrievalMode::no_retrieval;
  double semantic_entropy = 0.0;
  double predictive_entropy = 0.0;
  std::size_t retrieval_steps = 0;
  std::int64_t wall_time_ms = 0;
  bool failed = false;
  std::string error;
};

struct ModeCounts {
  std::size_t no_retrieval = 0;
  std::size_t single_step = 0;
  std::size_t multi_step = 0;
};

struct EvalReport {
  std::string dataset;
  std::string method;
  std::size_t num_questions = 0;
  std::size_t num_failed = 0;
  double em = 0.0;   // percent
  double f1 = 0.0;   // percent
  double acc = 0.0;  // percent
  double mean_retrieval_steps = 0.0;
  double mean_wall_time_ms = 0.0;
  /// Mean wall time divided by the single-step baseline's; only set when a
  /// baseline with non-zero time is supplied.
  std::optional<double> relative_time;
  ModeCounts mode_counts;
  std::vector<std::string> failed_ids;
};

struct EvalRun {
  EvalReport report;
  std::vector<EvalRecord> records;
  std::vector<PipelineResult> results;
};

struct RunnerOptions {
  std::size_t parallelism = 4;
  /// A backend_unreachable error aborts the run instead of failing one
  /// question; every later question would fail the same way.
  bool abort_on_unreachable = true;
};

/// Reads {"id", "question", "answers"} JSONL. Throws dataset_not_found,
/// malformed_record, or no_gold_answers.
std::vector<Question> load_dataset(const std::filesystem::path& path);

EvalRecord score_result(const Question& question, const PipelineResult& result);

/// Aggregates records in order. `baseline` supplies the single-step run for
/// relative time.
EvalReport aggregate(std::string dataset, std::string method, std::span<const EvalRecord> records,
                     const EvalReport* baseline = nullptr);

/// Answers every question (bounded parallelism, results in input order),
/// scores and aggregates. Per-question pipeline errors score 0 and are
/// flagged. Throws empty_dataset for no questions.
EvalRun run_eval(const std::string& dataset, std::span<const Question> questions, const Pipeline& pipeline,
                 const RunnerOptions& runner, const EvalReport* baseline = nullptr);

struct AblationRow {
  std::string method;
  std::optional<double> tau;
  EvalReport report;
};

/// Rows: no retrieval, single-step, predictive entropy at each tau in
/// `tau_pe`, semantic entropy at `tau_se`. Entropy arms use binary routing
/// (tau_low = tau_high = tau). `base` supplies everything else.
std::vector<AblationRow> ablate(const std::string& dataset, std::span<const Question> questions,
                                const Generator& generator, const EntailmentBackend& entailment,
                                const Retriever* retriever, const PipelineConfig& base, double tau_se,
                                std::span<const double> tau_pe, const RunnerOptions& runner);

/// Aligned plain-text table of reports (one row each).
std::string format_report_table(std::span<const EvalReport> reports);
std::string format_ablation_table(std::span<const AblationRow> rows);

}  // namespace sugar
