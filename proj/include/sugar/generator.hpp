#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sugar/http.hpp"

namespace sugar {

struct Question {
  std::string id;
  std::string text;
  std::vector<std::string> gold_answers;
};

struct GenerationRequest {
  Question question;
  /// Empty means closed-book generation.
  std::vector<std::string> context_documents;
  std::size_t num_samples = 10;
  double temperature = 1.0;
  std::uint64_t seed = 0;
};

/// One generated answer with natural-log token probabilities.
struct AnswerSample {
  std::string text;
  std::vector<double> token_logprobs;
  double total_logprob = 0.0;

  std::size_t token_count() const noexcept { return token_logprobs.size(); }

  /// Builds a sample whose total is the sum of `token_logprobs`. Throws
  /// precondition_violation on an empty list or a positive log-prob.
  static AnswerSample from_tokens(std::string text, std::vector<double> token_logprobs);
};

/// Language-model backend producing answer samples.
class Generator {
 public:
  virtual ~Generator() = default;

  /// Returns exactly `req.num_samples` samples.
  virtual std::vector<AnswerSample> sample_answers(const GenerationRequest& req) const = 0;

  /// One low-temperature answer for the final response.
  virtual AnswerSample greedy_answer(const Question& question,
                                     std::span<const std::string> context_documents) const = 0;
};

/// One-shot "Q: <question> A:" prompt with an optional context block.
struct PromptTemplate {
  std::string context_header = "Context:";
  /// Demonstration pair rendered before the question; skipped when either is empty.
  std::string demo_question = "Who wrote Romeo and Juliet?";
  std::string demo_answer = "William Shakespeare";

  std::string render(const Question& question, std::span<const std::string> context_documents) const;
};

// ---------------------------------------------------------------------------
// Scripted mock
// ---------------------------------------------------------------------------

struct PoolEntry {
  std::string text;
  double probability = 0.0;
  std::vector<double> token_logprobs;
};

/// A pool that replaces the closed-book pool once the context contains the
/// trigger phrase (matched as a normalized token run).
struct ContextRule {
  std::string when_context_contains;
  std::vector<PoolEntry> pool;
};

struct ScriptedQuestion {
  std::vector<PoolEntry> pool;
  std::vector<ContextRule> with_context;
};

/// Question id -> scripted answer pools.
struct MockScenario {
  std::map<std::string, ScriptedQuestion> questions;

  static MockScenario parse(const std::string& json_text);
  static MockScenario load(const std::filesystem::path& path);
};

/// Deterministic generator driven by a MockScenario.
///
/// Samples are drawn by largest-remainder apportionment of the (tempered)
/// pool probabilities over the requested sample count, with remainder ties
/// and sample order fixed by the request seed. A pool [A 0.5, B 0.5] with
/// 10 samples therefore always yields five of each, in seed-dependent order.
/// At temperature 0 every sample is the greedy answer.
class MockGenerator final : public Generator {
 public:
  explicit MockGenerator(MockScenario scenario);

  std::vector<AnswerSample> sample_answers(const GenerationRequest& req) const override;
  AnswerSample greedy_answer(const Question& question,
                             std::span<const std::string> context_documents) const override;

  /// The pool in effect for a question given its context (first matching
  /// rule wins, falling back to the closed-book pool).
  const std::vector<PoolEntry>& active_pool(const Question& question,
                                            std::span<const std::string> context_documents) const;

 private:
  MockScenario scenario_;
};

// ---------------------------------------------------------------------------
// OpenAI-compatible completions backend
// ---------------------------------------------------------------------------

struct HttpGeneratorOptions {
  HttpEndpoint endpoint;
  std::string model;
  PromptTemplate prompt;
  double greedy_temperature = 0.0;
  std::size_t max_tokens = 32;
  /// Maximum parallel requests per sample_answers call.
  std::size_t fanout = 4;
};

/// POSTs {model, prompt, n, temperature, logprobs: true, seed} (plus
/// max_tokens and a newline stop sequence) and requires
/// `choices[].logprobs.token_logprobs` in the response. Requests larger than
/// one call are split into at most `fanout` parallel calls with derived seeds.
class HttpGenerator final : public Generator {
 public:
  explicit HttpGenerator(HttpGeneratorOptions options);

  std::vector<AnswerSample> sample_answers(const GenerationRequest& req) const override;
  AnswerSample greedy_answer(const Question& question,
                             std::span<const std::string> context_documents) const override;

 private:
  std::vector<AnswerSample> complete(const std::string& prompt, std::size_t n, double temperature,
                                     std::uint64_t seed) const;

  HttpGeneratorOptions options_;
};

/// Parses an OpenAI completions response body into samples. Exposed for tests.
std::vector<AnswerSample> parse_completions_response(const std::string& body);

}  // namespace sugar
