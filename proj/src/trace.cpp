#include "sugar/trace.hpp"

#include <chrono>
#include <cstdio>

#include "sugar/error.hpp"
#include "sugar/io.hpp"
#include "sugar/text.hpp"

namespace sugar {

using nlohmann::json;

void TraceLog::append(json event) {
  std::lock_guard lock(mutex_);
  events_.push_back(std::move(event));
}

std::vector<json> TraceLog::events() const {
  std::lock_guard lock(mutex_);
  return events_;
}

double TraceLog::total_backend_latency_ms() const {
  std::lock_guard lock(mutex_);
  double total = 0.0;
  for (const auto& e : events_) {
    if (e.contains("latency_ms")) total += e["latency_ms"].get<double>();
  }
  return total;
}

namespace {

std::string context_fingerprint(std::span<const std::string> docs) {
  std::uint64_t h = fnv1a("");
  for (const auto& d : docs) h = fnv1a(std::to_string(h) + '\x1f' + d);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Runs `call`, stamping latency and any error onto `event` before appending.
template <typename F>
auto recorded(TraceLog& log, json event, F&& call, const auto& encode) {
  const auto start = std::chrono::steady_clock::now();
  auto latency = [&] {
    if (!log.record_timing()) return 0.0;
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  };
  try {
    auto out = call();
    event["latency_ms"] = latency();
    event["output"] = encode(out);
    log.append(std::move(event));
    return out;
  } catch (const Error& e) {
    event["latency_ms"] = latency();
    event["error"] = {{"code", static_cast<int>(e.code())}, {"message", e.what()}};
    log.append(std::move(event));
    throw;
  }
}

json encode_samples(const std::vector<AnswerSample>& samples) {
  json out = json::array();
  for (const auto& s : samples) out.push_back(to_json(s));
  return out;
}

}  // namespace

std::vector<AnswerSample> RecordingGenerator::sample_answers(const GenerationRequest& req) const {
  json event = {{"type", "generate"},
                {"call", "sample"},
                {"question_id", req.question.id},
                {"num_samples", req.num_samples},
                {"temperature", req.temperature},
                {"seed", req.seed},
                {"context_size", req.context_documents.size()},
                {"context_fingerprint", context_fingerprint(req.context_documents)}};
  return recorded(log_, std::move(event), [&] { return inner_.sample_answers(req); }, encode_samples);
}

AnswerSample RecordingGenerator::greedy_answer(const Question& question,
                                               std::span<const std::string> context_documents) const {
  json event = {{"type", "generate"},
                {"call", "greedy"},
                {"question_id", question.id},
                {"context_size", context_documents.size()},
                {"context_fingerprint", context_fingerprint(context_documents)}};
  return recorded(
      log_, std::move(event), [&] { return inner_.greedy_answer(question, context_documents); },
      [](const AnswerSample& s) { return to_json(s); });
}

EntailmentVerdict RecordingEntailment::entails(const std::string& question_text, const std::string& premise_answer,
                                               const std::string& hypothesis_answer) const {
  json event = {{"type", "entail"}, {"question", question_text}, {"premise", premise_answer}, {"hypothesis", hypothesis_answer}};
  return recorded(
      log_, std::move(event), [&] { return inner_.entails(question_text, premise_answer, hypothesis_answer); },
      [](const EntailmentVerdict& v) { return json{{"label", to_string(v.label)}, {"score", v.score}}; });
}

std::vector<ScoredDocument> RecordingRetriever::search(std::string_view query, std::size_t k) const {
  json event = {{"type", "retrieve"}, {"query", query}, {"k", k}};
  return recorded(
      log_, std::move(event), [&] { return inner_.search(query, k); },
      [](const std::vector<ScoredDocument>& hits) {
        json out = json::array();
        for (const auto& h : hits) out.push_back({{"document", to_json(h.document)}, {"score", h.score}});
        return out;
      });
}

// ---------------------------------------------------------------------------
// Replay
// ---------------------------------------------------------------------------

namespace {

std::vector<json> calls_of(const std::vector<json>& events, const std::string& type) {
  std::vector<json> out;
  for (const auto& e : events) {
    if (e.value("type", "") == type) out.push_back(e);
  }
  return out;
}

[[noreturn]] void diverged(const std::string& what) {
  throw Error(Errc::malformed_backend_response, "trace replay diverged: " + what);
}

void expect_field(const json& call, const char* key, const json& actual) {
  if (!call.contains(key) || call[key] != actual) {
    diverged(std::string(key) + " recorded as " + (call.contains(key) ? call[key].dump() : "<missing>") +
             ", requested " + actual.dump());
  }
}

void rethrow_recorded_error(const json& call) {
  if (!call.contains("error")) return;
  throw Error(static_cast<Errc>(call["error"].at("code").get<int>()), call["error"].at("message").get<std::string>());
}

}  // namespace

TraceReplay::Cursor::Cursor(std::vector<json> calls, std::string type)
    : calls_(std::move(calls)), type_(std::move(type)) {}

json TraceReplay::Cursor::next() const {
  std::lock_guard lock(mutex_);
  if (pos_ >= calls_.size()) diverged("more " + type_ + " calls than recorded");
  return calls_[pos_++];
}

bool TraceReplay::Cursor::done() const {
  std::lock_guard lock(mutex_);
  return pos_ == calls_.size();
}

TraceReplay::TraceReplay(std::vector<json> events)
    : generate_calls_(calls_of(events, "generate"), "generate"),
      entail_calls_(calls_of(events, "entail"), "entail"),
      retrieve_calls_(calls_of(events, "retrieve"), "retrieve"),
      generator_(generate_calls_),
      entailment_(entail_calls_),
      retriever_(retrieve_calls_) {}

bool TraceReplay::exhausted() const {
  return generate_calls_.done() && entail_calls_.done() && retrieve_calls_.done();
}

std::vector<AnswerSample> TraceReplay::ReplayGenerator::sample_answers(const GenerationRequest& req) const {
  const auto call = cursor_.next();
  expect_field(call, "call", "sample");
  expect_field(call, "question_id", req.question.id);
  expect_field(call, "num_samples", req.num_samples);
  expect_field(call, "temperature", req.temperature);
  expect_field(call, "seed", req.seed);
  expect_field(call, "context_fingerprint", context_fingerprint(req.context_documents));
  rethrow_recorded_error(call);
  std::vector<AnswerSample> out;
  for (const auto& s : call.at("output")) out.push_back(answer_sample_from_json(s));
  return out;
}

AnswerSample TraceReplay::ReplayGenerator::greedy_answer(const Question& question,
                                                         std::span<const std::string> context_documents) const {
  const auto call = cursor_.next();
  expect_field(call, "call", "greedy");
  expect_field(call, "question_id", question.id);
  expect_field(call, "context_fingerprint", context_fingerprint(context_documents));
  rethrow_recorded_error(call);
  return answer_sample_from_json(call.at("output"));
}

EntailmentVerdict TraceReplay::ReplayEntailment::entails(const std::string& question_text,
                                                         const std::string& premise_answer,
                                                         const std::string& hypothesis_answer) const {
  const auto call = cursor_.next();
  expect_field(call, "question", question_text);
  expect_field(call, "premise", premise_answer);
  expect_field(call, "hypothesis", hypothesis_answer);
  rethrow_recorded_error(call);
  const auto& out = call.at("output");
  return {entailment_label_from_string(out.at("label").get<std::string>()), out.at("score").get<double>()};
}

std::vector<ScoredDocument> TraceReplay::ReplayRetriever::search(std::string_view query, std::size_t k) const {
  const auto call = cursor_.next();
  expect_field(call, "query", query);
  expect_field(call, "k", k);
  rethrow_recorded_error(call);
  std::vector<ScoredDocument> out;
  for (const auto& h : call.at("output")) out.push_back({document_from_json(h.at("document")), h.at("score").get<double>()});
  return out;
}

}  // namespace sugar
