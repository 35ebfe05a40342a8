#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "json.hpp"
#include "sugar/entailment.hpp"
#include "sugar/eval.hpp"
#include "sugar/generator.hpp"
#include "sugar/orchestrator.hpp"
#include "sugar/retriever.hpp"
#include "sugar/router.hpp"

namespace sugar {

enum class BackendKind { mock, http };

struct GeneratorSection {
  BackendKind backend = BackendKind::mock;
  std::filesystem::path mock_scenario;
  std::string url;
  std::string model;
  std::string api_key;
  std::size_t fanout = 4;
  std::size_t max_retries = 2;
  int timeout_ms = 30000;
  PromptTemplate prompt;
};

struct EntailmentSection {
  BackendKind backend = BackendKind::mock;
  std::filesystem::path alias_table;
  std::filesystem::path antonym_table;
  std::string url;
  std::string api_key;
  std::size_t max_retries = 2;
  int timeout_ms = 30000;
};

struct SamplingSection {
  std::size_t n = 10;
  double temperature = 1.0;
  double final_temperature = 0.0;
  bool length_normalized = false;
};

struct RouterSection {
  Thresholds thresholds;
  CalibrationObjective objective = CalibrationObjective::accuracy;
  std::optional<RetrievalMode> force_mode;
};

struct RetrieverSection {
  std::size_t k = 5;
  std::filesystem::path index;
  std::filesystem::path corpus;
  Bm25Params bm25;
};

struct RunnerSection {
  std::size_t parallelism = 4;
  bool record_timing = true;
  bool abort_on_unreachable = true;
};

/// Whole-run configuration. Relative paths resolve against the config file's
/// directory.
struct RunConfig {
  std::uint64_t seed = 0;
  GeneratorSection generator;
  EntailmentSection entailment;
  SamplingSection sampling;
  RouterSection router;
  std::size_t max_steps = 3;
  RetrieverSection retriever;
  RunnerSection runner;
};

/// Parses a config document. Unknown keys, wrong types and missing required
/// keys throw config_error naming the full key path (e.g. "router.tau_low").
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// SUGAR_GENERATOR_URL, SUGAR_ENTAILMENT_URL, SUGAR_API_KEY and
/// SUGAR_NLI_API_KEY override the corresponding fields when set.
void apply_environment(RunConfig& config);

/// Checks cross-field constraints (thresholds, backend requirements).
void validate(const RunConfig& config);

nlohmann::json to_json(const RunConfig& config);

PipelineConfig pipeline_config(const RunConfig& config);
RunnerOptions runner_options(const RunConfig& config);

/// Backends constructed from a config; owns them for the run's lifetime.
struct Backends {
  std::unique_ptr<Generator> generator;
  std::unique_ptr<EntailmentBackend> entailment;
  /// Null when neither an index nor a corpus is configured.
  std::unique_ptr<Bm25Index> retriever;
};

Backends make_backends(const RunConfig& config);

}  // namespace sugar
