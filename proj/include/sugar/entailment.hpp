#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "sugar/http.hpp"

namespace sugar {

enum class EntailmentLabel { entails, neutral, contradicts };

std::string_view to_string(EntailmentLabel label) noexcept;
EntailmentLabel entailment_label_from_string(std::string_view s);

struct EntailmentVerdict {
  EntailmentLabel label = EntailmentLabel::neutral;
  /// Backend confidence for `label`, in [0, 1].
  double score = 0.0;
};

/// Directional entailment between two answers to the same question.
class EntailmentBackend {
 public:
  virtual ~EntailmentBackend() = default;
  virtual EntailmentVerdict entails(const std::string& question_text, const std::string& premise_answer,
                                    const std::string& hypothesis_answer) const = 0;
};

/// Throws precondition_violation unless all three strings are non-blank.
void check_entailment_inputs(std::string_view question_text, std::string_view premise_answer,
                             std::string_view hypothesis_answer);

/// True iff the premise and hypothesis entail each other. Both directions are
/// always queried, so the relation is symmetric in (a, b).
bool bidirectionally_equivalent(const EntailmentBackend& backend, const std::string& question_text,
                                const std::string& a, const std::string& b);

/// Lists of phrases; each list is one class.
using PhraseTable = std::vector<std::vector<std::string>>;

PhraseTable load_phrase_table(const std::filesystem::path& path);
PhraseTable parse_phrase_table(const std::string& json_text);

/// Rule-based entailment over normalized answers.
///
///  - normalized strings equal                        -> entails (score 1)
///  - premise and hypothesis mention different phrases
///    of one antonym class                            -> contradicts
///  - every alias class mentioned by the hypothesis is
///    also mentioned by the premise (and there is one) -> entails
///  - otherwise                                       -> neutral
///
/// A class is "mentioned" when one of its normalized phrases occurs as a
/// contiguous token run of the normalized answer.
class MockEntailment final : public EntailmentBackend {
 public:
  explicit MockEntailment(PhraseTable aliases = {}, PhraseTable antonyms = {});

  EntailmentVerdict entails(const std::string& question_text, const std::string& premise_answer,
                            const std::string& hypothesis_answer) const override;

 private:
  using TokenTable = std::vector<std::vector<std::vector<std::string>>>;
  static TokenTable tokenize_table(const PhraseTable& table);

  TokenTable aliases_;
  TokenTable antonyms_;
};

struct HttpEntailmentOptions {
  HttpEndpoint endpoint;
};

/// NLI service client: POST {premise, hypothesis} and read
/// {label, probabilities: {entails, neutral, contradicts}}. The premise and
/// hypothesis are the question followed by the respective answer.
class HttpEntailment final : public EntailmentBackend {
 public:
  explicit HttpEntailment(HttpEntailmentOptions options);

  EntailmentVerdict entails(const std::string& question_text, const std::string& premise_answer,
                            const std::string& hypothesis_answer) const override;

 private:
  HttpEntailmentOptions options_;
};

/// Parses an NLI response. The verdict label is the argmax of the
/// probabilities; a disagreeing `label` field is a malformed response.
EntailmentVerdict parse_nli_response(const std::string& body);

/// Memoizes verdicts per (question, premise, hypothesis). Thread-safe.
class CachedEntailment final : public EntailmentBackend {
 public:
  explicit CachedEntailment(const EntailmentBackend& inner) : inner_(inner) {}

  EntailmentVerdict entails(const std::string& question_text, const std::string& premise_answer,
                            const std::string& hypothesis_answer) const override;

  std::size_t size() const;

 private:
  using Key = std::tuple<std::string, std::string, std::string>;

  const EntailmentBackend& inner_;
  mutable std::mutex mutex_;
  mutable std::map<Key, EntailmentVerdict> memo_;
};

}  // namespace sugar
