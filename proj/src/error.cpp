#include "sugar/error.hpp"

namespace sugar {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::precondition_violation: return "precondition violation";
    case Errc::config_error: return "configuration error";
    case Errc::backend_unreachable: return "backend unreachable";
    case Errc::malformed_backend_response: return "malformed backend response";
    case Errc::unknown_question: return "unknown question";
    case Errc::empty_sample_set: return "empty sample set";
    case Errc::length_mismatch: return "length mismatch";
    case Errc::missing_cluster_probs: return "missing cluster probabilities";
    case Errc::invalid_thresholds: return "invalid thresholds";
    case Errc::empty_records: return "empty records";
    case Errc::invalid_grid: return "invalid grid";
    case Errc::corpus_not_found: return "corpus not found";
    case Errc::malformed_record: return "malformed record";
    case Errc::duplicate_doc_id: return "duplicate doc id";
    case Errc::index_not_built: return "index not built";
    case Errc::no_gold_answers: return "no gold answers";
    case Errc::dataset_not_found: return "dataset not found";
    case Errc::empty_dataset: return "empty dataset";
  }
  return "unknown error";
}

Error::Error(Errc code, const std::string& message, std::optional<std::size_t> line)
    : std::runtime_error(message), code_(code), line_(line) {}

int exit_code_for(Errc code) noexcept {
  switch (code) {
    case Errc::precondition_violation:
    case Errc::config_error:
    case Errc::invalid_thresholds:
    case Errc::invalid_grid:
    case Errc::corpus_not_found:
    case Errc::dataset_not_found:
    case Errc::index_not_built:
      return kExitUsage;
    case Errc::backend_unreachable:
    case Errc::malformed_backend_response:
      return kExitBackend;
    default:
      return kExitData;
  }
}

}  // namespace sugar
