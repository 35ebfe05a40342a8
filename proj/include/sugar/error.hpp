#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sugar {

/// Failure categories surfaced by the library. The CLI maps each one onto a
/// stable exit code through `exit_code_for`.
enum class Errc {
  precondition_violation,
  config_error,
  // backend gateways
  backend_unreachable,
  malformed_backend_response,
  unknown_question,
  // entropy
  empty_sample_set,
  length_mismatch,
  missing_cluster_probs,
  // router
  invalid_thresholds,
  empty_records,
  invalid_grid,
  // retriever
  corpus_not_found,
  malformed_record,
  duplicate_doc_id,
  index_not_built,
  // eval
  no_gold_answers,
  dataset_not_found,
  empty_dataset,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::optional<std::size_t> line = std::nullopt);

  Errc code() const noexcept { return code_; }
  /// 1-based line number for record-oriented input errors.
  std::optional<std::size_t> line() const noexcept { return line_; }

 private:
  Errc code_;
  std::optional<std::size_t> line_;
};

/// Backend failures are the only errors the orchestrator treats as
/// transport-level (abort) rather than per-question (degrade).
inline bool is_backend_error(Errc code) noexcept {
  return code == Errc::backend_unreachable || code == Errc::malformed_backend_response;
}

// Exit-code contract: 0 success, 2 configuration/usage, 3 data, 4 backend.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitBackend = 4;

int exit_code_for(Errc code) noexcept;

}  // namespace sugar
