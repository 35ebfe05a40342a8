#pragma once

#include <cstddef>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "sugar/entailment.hpp"
#include "sugar/generator.hpp"
#include "sugar/retriever.hpp"

namespace sugar {

/// Ordered record of everything one pipeline run did: every backend call
/// (type "generate", "entail", "retrieve") with inputs, outputs and latency,
/// interleaved with pipeline events ("assess", "route", "draft").
class TraceLog {
 public:
  explicit TraceLog(bool record_timing = true) : record_timing_(record_timing) {}

  void append(nlohmann::json event);
  std::vector<nlohmann::json> events() const;
  bool record_timing() const noexcept { return record_timing_; }
  /// Sum of `latency_ms` over backend-call events.
  double total_backend_latency_ms() const;

 private:
  bool record_timing_;
  mutable std::mutex mutex_;
  std::vector<nlohmann::json> events_;
};

// Recording decorators. Each forwards to the wrapped backend and appends one
// event per call.

class RecordingGenerator final : public Generator {
 public:
  RecordingGenerator(const Generator& inner, TraceLog& log) : inner_(inner), log_(log) {}

  std::vector<AnswerSample> sample_answers(const GenerationRequest& req) const override;
  AnswerSample greedy_answer(const Question& question,
                             std::span<const std::string> context_documents) const override;

 private:
  const Generator& inner_;
  TraceLog& log_;
};

class RecordingEntailment final : public EntailmentBackend {
 public:
  RecordingEntailment(const EntailmentBackend& inner, TraceLog& log) : inner_(inner), log_(log) {}

  EntailmentVerdict entails(const std::string& question_text, const std::string& premise_answer,
                            const std::string& hypothesis_answer) const override;

 private:
  const EntailmentBackend& inner_;
  TraceLog& log_;
};

class RecordingRetriever final : public Retriever {
 public:
  RecordingRetriever(const Retriever& inner, TraceLog& log) : inner_(inner), log_(log) {}

  std::vector<ScoredDocument> search(std::string_view query, std::size_t k) const override;

 private:
  const Retriever& inner_;
  TraceLog& log_;
};

/// Serves recorded backend outputs back in call order. Each replay backend
/// consumes its own call type from the trace and checks that the request
/// matches the recorded one; a mismatch or an exhausted trace throws
/// malformed_backend_response.
class TraceReplay {
 public:
  explicit TraceReplay(std::vector<nlohmann::json> events);

  const Generator& generator() const noexcept { return generator_; }
  const EntailmentBackend& entailment() const noexcept { return entailment_; }
  const Retriever& retriever() const noexcept { return retriever_; }

  /// True when every recorded backend call was consumed.
  bool exhausted() const;

 private:
  class Cursor {
   public:
    Cursor(std::vector<nlohmann::json> calls, std::string type);
    nlohmann::json next() const;
    bool done() const;

   private:
    std::vector<nlohmann::json> calls_;
    std::string type_;
    mutable std::mutex mutex_;
    mutable std::size_t pos_ = 0;
  };

  class ReplayGenerator final : public Generator {
   public:
    explicit ReplayGenerator(const Cursor& cursor) : cursor_(cursor) {}
    std::vector<AnswerSample> sample_answers(const GenerationRequest& req) const override;
    AnswerSample greedy_answer(const Question& question,
                               std::span<const std::string> context_documents) const override;

   private:
    const Cursor& cursor_;
  };

  class ReplayEntailment final : public EntailmentBackend {
   public:
    explicit ReplayEntailment(const Cursor& cursor) : cursor_(cursor) {}
    EntailmentVerdict entails(const std::string& question_text, const std::string& premise_answer,
                              const std::string& hypothesis_answer) const override;

   private:
    const Cursor& cursor_;
  };

  class ReplayRetriever final : public Retriever {
   public:
    explicit ReplayRetriever(const Cursor& cursor) : cursor_(cursor) {}
    std::vector<ScoredDocument> search(std::string_view query, std::size_t k) const override;

   private:
    const Cursor& cursor_;
  };

  Cursor generate_calls_;
  Cursor entail_calls_;
  Cursor retrieve_calls_;
  ReplayGenerator generator_;
  ReplayEntailment entailment_;
  ReplayRetriever retriever_;
};

}  // namespace sugar
