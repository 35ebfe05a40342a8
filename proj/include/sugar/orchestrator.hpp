#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "sugar/entailment.hpp"
#include "sugar/entropy.hpp"
#include "sugar/error.hpp"
#include "sugar/generator.hpp"
#include "sugar/retriever.hpp"
#include "sugar/router.hpp"

namespace sugar {

/// Which uncertainty score drives routing. Predictive entropy is the
/// ablation baseline.
enum class EntropySignal { semantic, predictive };

struct PipelineConfig {
  std::size_t num_samples = 10;
  double sample_temperature = 1.0;
  bool length_normalized = false;
  Thresholds thresholds;
  EntropySignal signal = EntropySignal::semantic;
  /// Bypasses the router (uniform baselines, forced calibration runs).
  std::optional<RetrievalMode> forced_mode;
  std::size_t max_steps = 3;
  std::size_t top_k = 5;
  std::uint64_t seed = 0;
  /// When false, latencies and wall times are recorded as 0 so output is
  /// byte-reproducible.
  bool record_timing = true;
};

struct PipelineResult {
  std::string question_id;
  std::string answer;
  RetrievalDecision decision;
  /// Closed-book assessment that drove routing.
  EntropyReport entropy_report;
  std::size_t retrieval_steps = 0;
  /// Doc ids returned at each retrieval step.
  std::vector<std::vector<std::string>> retrieved_doc_ids;
  std::int64_t wall_time_ms = 0;
  std::vector<nlohmann::json> trace;
};

/// Raised when a backend fails mid-pipeline; carries the trace so far.
class PipelineError : public Error {
 public:
  PipelineError(const Error& cause, std::string question_id, std::vector<nlohmann::json> partial_trace);

  const std::string& question_id() const noexcept { return question_id_; }
  const std::vector<nlohmann::json>& partial_trace() const noexcept { return partial_trace_; }

 private:
  std::string question_id_;
  std::vector<nlohmann::json> partial_trace_;
};

/// Assess -> route -> (retrieve) -> answer.
///
/// Backends are borrowed and must outlive the pipeline. The retriever may be
/// null when every question is expected to route to no retrieval; a question
/// that needs it then fails with index_not_built.
class Pipeline {
 public:
  Pipeline(const Generator& generator, const EntailmentBackend& entailment, const Retriever* retriever,
           PipelineConfig config);

  PipelineResult answer_question(const Question& question) const;

  /// Skips routing and always runs the iterative loop: retrieve with the
  /// question (plus the previous draft after step 1), draft an answer over
  /// all unique documents so far, re-score entropy with that context, and
  /// stop once it drops below tau_low or max_steps is reached.
  PipelineResult multi_step_answer(const Question& question) const;

  const PipelineConfig& config() const noexcept { return config_; }

 private:
  PipelineResult run(const Question& question, std::optional<RetrievalMode> forced) const;

  const Generator& generator_;
  const EntailmentBackend& entailment_;
  const Retriever* retriever_;
  PipelineConfig config_;
};

/// Re-runs a recorded result against its own trace and returns the replayed
/// result. Throws malformed_backend_response if the pipeline diverges from
/// the recorded calls.
PipelineResult replay(const PipelineResult& recorded, const Question& question, const PipelineConfig& config);

/// Answer, decision, entropies, steps and doc ids all identical.
bool same_outcome(const PipelineResult& a, const PipelineResult& b);

}  // namespace sugar
