#include "sugar/entailment.hpp"

#include <algorithm>
#include <array>
#include <set>

#include "json.hpp"
#include "sugar/error.hpp"
#include "sugar/io.hpp"
#include "sugar/text.hpp"

namespace sugar {

using nlohmann::json;

std::string_view to_string(EntailmentLabel label) noexcept {
  switch (label) {
    case EntailmentLabel::entails: return "entails";
    case EntailmentLabel::neutral: return "neutral";
    case EntailmentLabel::contradicts: return "contradicts";
  }
  return "neutral";
}

EntailmentLabel entailment_label_from_string(std::string_view s) {
  if (s == "entails" || s == "entailment") return EntailmentLabel::entails;
  if (s == "neutral") return EntailmentLabel::neutral;
  if (s == "contradicts" || s == "contradiction") return EntailmentLabel::contradicts;
  throw Error(Errc::malformed_backend_response, "unknown entailment label \"" + std::string(s) + "\"");
}

void check_entailment_inputs(std::string_view question_text, std::string_view premise_answer,
                             std::string_view hypothesis_answer) {
  if (trim(question_text).empty() || trim(premise_answer).empty() || trim(hypothesis_answer).empty()) {
    throw Error(Errc::precondition_violation, "entailment inputs must be non-empty after trimming");
  }
}

bool bidirectionally_equivalent(const EntailmentBackend& backend, const std::string& question_text,
                                const std::string& a, const std::string& b) {
  const bool forward = backend.entails(question_text, a, b).label == EntailmentLabel::entails;
  const bool backward = backend.entails(question_text, b, a).label == EntailmentLabel::entails;
  return forward && backward;
}

PhraseTable parse_phrase_table(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::config_error, std::string("phrase table is not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw Error(Errc::config_error, "phrase table must be an array of string lists");
  PhraseTable table;
  for (const auto& cls : doc) {
    if (!cls.is_array()) throw Error(Errc::config_error, "phrase table entries must be string lists");
    auto& out = table.emplace_back();
    for (const auto& phrase : cls) {
      if (!phrase.is_string()) throw Error(Errc::config_error, "phrase table entries must be string lists");
      out.push_back(phrase.get<std::string>());
    }
  }
  return table;
}

PhraseTable load_phrase_table(const std::filesystem::path& path) {
  return parse_phrase_table(read_file(path, Errc::config_error));
}

// ---------------------------------------------------------------------------
// MockEntailment
// ---------------------------------------------------------------------------

MockEntailment::TokenTable MockEntailment::tokenize_table(const PhraseTable& table) {
  TokenTable out;
  for (const auto& cls : table) {
    auto& phrases = out.emplace_back();
    for (const auto& p : cls) {
      auto tokens = normalized_tokens(p);
      if (!tokens.empty()) phrases.push_back(std::move(tokens));
    }
  }
  return out;
}

MockEntailment::MockEntailment(PhraseTable aliases, PhraseTable antonyms)
    : aliases_(tokenize_table(aliases)), antonyms_(tokenize_table(antonyms)) {}

namespace {

using Tokens = std::vector<std::string>;

std::set<std::size_t> mentioned_classes(const std::vector<std::vector<Tokens>>& table, const Tokens& text) {
  std::set<std::size_t> classes;
  for (std::size_t c = 0; c < table.size(); ++c) {
    for (const auto& phrase : table[c]) {
      if (contains_token_run(text, phrase)) {
        classes.insert(c);
        break;
      }
    }
  }
  return classes;
}

/// Phrase indices of class `c` mentioned by `text`.
std::set<std::size_t> mentioned_phrases(const std::vector<Tokens>& cls, const Tokens& text) {
  std::set<std::size_t> out;
  for (std::size_t p = 0; p < cls.size(); ++p) {
    if (contains_token_run(text, cls[p])) out.insert(p);
  }
  return out;
}

}  // namespace

EntailmentVerdict MockEntailment::entails(const std::string& question_text, const std::string& premise_answer,
                                          const std::string& hypothesis_answer) const {
  check_entailment_inputs(question_text, premise_answer, hypothesis_answer);
  const auto premise = normalized_tokens(premise_answer);
  const auto hypothesis = normalized_tokens(hypothesis_answer);

  if (premise == hypothesis) return {EntailmentLabel::entails, 1.0};

  for (const auto& cls : antonyms_) {
    const auto in_premise = mentioned_phrases(cls, premise);
    const auto in_hypothesis = mentioned_phrases(cls, hypothesis);
    if (in_premise.empty() || in_hypothesis.empty()) continue;
    const bool disjoint = std::none_of(in_hypothesis.begin(), in_hypothesis.end(),
                                       [&](std::size_t p) { return in_premise.contains(p); });
    if (disjoint) return {EntailmentLabel::contradicts, 1.0};
  }

  const auto hypothesis_classes = mentioned_classes(aliases_, hypothesis);
  if (!hypothesis_classes.empty()) {
    const auto premise_classes = mentioned_classes(aliases_, premise);
    if (std::includes(premise_classes.begin(), premise_classes.end(), hypothesis_classes.begin(),
                      hypothesis_classes.end())) {
      return {EntailmentLabel::entails, 1.0};
    }
  }
  return {EntailmentLabel::neutral, 1.0};
}

// ---------------------------------------------------------------------------
// HttpEntailment
// ---------------------------------------------------------------------------

EntailmentVerdict parse_nli_response(const std::string& body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(Errc::malformed_backend_response, std::string("NLI response is not JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("probabilities") || !doc["probabilities"].is_object()) {
    throw Error(Errc::malformed_backend_response, "NLI response has no probabilities object");
  }
  constexpr std::array labels = {EntailmentLabel::entails, EntailmentLabel::neutral, EntailmentLabel::contradicts};
  const auto& probs = doc["probabilities"];
  EntailmentVerdict best{EntailmentLabel::neutral, -1.0};
  for (auto label : labels) {
    const std::string key(to_string(label));
    if (!probs.contains(key) || !probs[key].is_number()) {
      throw Error(Errc::malformed_backend_response, "NLI probabilities missing \"" + key + "\"");
    }
    const double p = probs[key].get<double>();
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(Errc::malformed_backend_response, "NLI probability out of [0, 1] for \"" + key + "\"");
    }
    if (p > best.score) best = {label, p};
  }
  if (doc.contains("label")) {
    if (!doc["label"].is_string()) throw Error(Errc::malformed_backend_response, "NLI label must be a string");
    const auto reported = entailment_label_from_string(doc["label"].get<std::string>());
    const std::string key(to_string(reported));
    if (probs[key].get<double>() < best.score) {
      throw Error(Errc::malformed_backend_response,
                  "NLI label \"" + key + "\" disagrees with the argmax of its probabilities");
    }
    best.label = reported;  // ties resolve to the reported label
  }
  return best;
}

HttpEntailment::HttpEntailment(HttpEntailmentOptions options) : options_(std::move(options)) {}

EntailmentVerdict HttpEntailment::entails(const std::string& question_text, const std::string& premise_answer,
                                          const std::string& hypothesis_answer) const {
  check_entailment_inputs(question_text, premise_answer, hypothesis_answer);
  const json body = {
      {"premise", question_text + " " + premise_answer},
      {"hypothesis", question_text + " " + hypothesis_answer},
  };
  return parse_nli_response(post_json(options_.endpoint, body.dump()));
}

// ---------------------------------------------------------------------------
// CachedEntailment
// ---------------------------------------------------------------------------

EntailmentVerdict CachedEntailment::entails(const std::string& question_text, const std::string& premise_answer,
                                            const std::string& hypothesis_answer) const {
  Key key{question_text, premise_answer, hypothesis_answer};
  {
    std::lock_guard lock(mutex_);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  }
  // Not held across the backend call; racing callers store equal verdicts.
  auto verdict = inner_.entails(question_text, premise_answer, hypothesis_answer);
  std::lock_guard lock(mutex_);
  memo_.emplace(std::move(key), verdict);
  return verdict;
}

std::size_t CachedEntailment::size() const {
  std::lock_guard lock(mutex_);
  return memo_.size();
}

}  // namespace sugar
