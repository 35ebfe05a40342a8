#include "sugar/orchestrator.hpp"

#include <chrono>
#include <cmath>
#include <unordered_set>

#include "sugar/io.hpp"
#include "sugar/random.hpp"
#include "sugar/text.hpp"
#include "sugar/trace.hpp"

namespace sugar {

using nlohmann::json;

PipelineError::PipelineError(const Error& cause, std::string question_id, std::vector<json> partial_trace)
    : Error(cause.code(), cause.what(), cause.line()),
      question_id_(std::move(question_id)),
      partial_trace_(std::move(partial_trace)) {}

Pipeline::Pipeline(const Generator& generator, const EntailmentBackend& entailment, const Retriever* retriever,
                   PipelineConfig config)
    : generator_(generator), entailment_(entailment), retriever_(retriever), config_(std::move(config)) {
  validate(config_.thresholds);
  if (config_.num_samples == 0) throw Error(Errc::config_error, "sampling.n must be >= 1");
  if (!(config_.sample_temperature >= 0.0)) throw Error(Errc::config_error, "sampling.temperature must be >= 0");
  if (config_.max_steps == 0) throw Error(Errc::config_error, "multistep.max_steps must be >= 1");
  if (config_.top_k == 0) throw Error(Errc::config_error, "retriever.k must be >= 1");
}

PipelineResult Pipeline::answer_question(const Question& question) const { return run(question, config_.forced_mode); }

PipelineResult Pipeline::multi_step_answer(const Question& question) const {
  return run(question, RetrievalMode::multi_step);
}

namespace {

std::string context_text(const Document& d) { return d.title.empty() ? d.text : d.title + ": " + d.text; }

}  // namespace

PipelineResult Pipeline::run(const Question& question, std::optional<RetrievalMode> forced) const {
  if (trim(question.text).empty()) throw Error(Errc::precondition_violation, "question text is empty");

  const auto start = std::chrono::steady_clock::now();
  TraceLog log(config_.record_timing);
  RecordingGenerator generator(generator_, log);
  RecordingEntailment recorded_entailment(entailment_, log);
  CachedEntailment entailment(recorded_entailment);
  std::optional<RecordingRetriever> retriever;
  if (retriever_ != nullptr) retriever.emplace(*retriever_, log);

  const auto question_seed = derive_seed(config_.seed, fnv1a(question.id));
  const EquivalenceFn equivalent = [&](const std::string& q, const std::string& a, const std::string& b) {
    return bidirectionally_equivalent(entailment, q, a, b);
  };
  auto signal = [&](const EntropyReport& r) {
    return config_.signal == EntropySignal::semantic ? r.semantic_entropy : r.predictive_entropy;
  };
  auto assess = [&](std::vector<std::string> context, std::size_t step) {
    GenerationRequest req{question, std::move(context), config_.num_samples, config_.sample_temperature,
                          derive_seed(question_seed, step)};
    const auto samples = generator.sample_answers(req);
    if (samples.size() != config_.num_samples) {
      throw Error(Errc::malformed_backend_response, "backend returned " + std::to_string(samples.size()) +
                                                        " samples, expected " + std::to_string(config_.num_samples));
    }
    auto report = assess_entropy(question.text, samples, equivalent, config_.length_normalized);
    log.append({{"type", "assess"},
                {"step", step},
                {"semantic_entropy", report.semantic_entropy},
                {"predictive_entropy", report.predictive_entropy},
                {"num_clusters", report.clustering.clusters.size()}});
    return report;
  };
  auto search = [&](const std::string& query) {
    if (!retriever) throw Error(Errc::index_not_built, "retrieval requested but no retriever index is configured");
    return retriever->search(query, config_.top_k);
  };

  PipelineResult result;
  result.question_id = question.id;
  try {
    result.entropy_report = assess({}, 0);
    const double entropy = signal(result.entropy_report);
    result.decision = forced ? RetrievalDecision{*forced, entropy, config_.thresholds}
                             : decide(entropy, config_.thresholds);
    log.append({{"type", "route"},
                {"mode", to_string(result.decision.mode)},
                {"entropy", entropy},
                {"signal", config_.signal == EntropySignal::semantic ? "semantic" : "predictive"},
                {"forced", forced.has_value()}});

    switch (result.decision.mode) {
      case RetrievalMode::no_retrieval: {
        result.answer = generator.greedy_answer(question, {}).text;
        break;
      }
      case RetrievalMode::single_step: {
        const auto hits = search(question.text);
        std::vector<std::string> context;
        auto& ids = result.retrieved_doc_ids.emplace_back();
        for (const auto& h : hits) {
          ids.push_back(h.document.doc_id);
          context.push_back(context_text(h.document));
        }
        result.retrieval_steps = 1;
        result.answer = generator.greedy_answer(question, context).text;
        break;
      }
      case RetrievalMode::multi_step: {
        std::vector<std::string> context;
        std::unordered_set<std::string> seen;
        std::string draft;
        for (std::size_t step = 1; step <= config_.max_steps; ++step) {
          const auto query = step == 1 ? question.text : question.text + " " + draft;
          auto& ids = result.retrieved_doc_ids.emplace_back();
          for (const auto& h : search(query)) {
            ids.push_back(h.document.doc_id);
            if (seen.insert(h.document.doc_id).second) context.push_back(context_text(h.document));
          }
          draft = generator.greedy_answer(question, context).text;
          log.append({{"type", "draft"}, {"step", step}, {"answer", draft}, {"context_size", context.size()}});
          result.retrieval_steps = step;
          if (signal(assess(context, step)) < config_.thresholds.tau_low) break;
        }
        result.answer = draft;
        break;
      }
    }
  } catch (const Error& e) {
    throw PipelineError(e, question.id, log.events());
  }

  if (config_.record_timing) {
    const auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    result.wall_time_ms = static_cast<std::int64_t>(std::ceil(elapsed));
  }
  result.trace = log.events();
  return result;
}

PipelineResult replay(const PipelineResult& recorded, const Question& question, const PipelineConfig& config) {
  if (question.id != recorded.question_id) {
    throw Error(Errc::precondition_violation,
                "replaying result for \"" + recorded.question_id + "\" against question \"" + question.id + "\"");
  }
  TraceReplay source(recorded.trace);
  const Pipeline pipeline(source.generator(), source.entailment(), &source.retriever(), config);
  auto result = pipeline.answer_question(question);
  if (!source.exhausted()) {
    throw Error(Errc::malformed_backend_response, "trace replay diverged: recorded calls left unconsumed");
  }
  return result;
}

bool same_outcome(const PipelineResult& a, const PipelineResult& b) {
  auto memberships = [](const Clustering& c) {
    std::vector<std::vector<std::size_t>> out;
    for (const auto& cl : c.clusters) out.push_back(cl.member_indices);
    return out;
  };
  return a.question_id == b.question_id && a.answer == b.answer && a.decision.mode == b.decision.mode &&
         a.decision.entropy == b.decision.entropy && a.decision.thresholds == b.decision.thresholds &&
         a.entropy_report.semantic_entropy == b.entropy_report.semantic_entropy &&
         a.entropy_report.predictive_entropy == b.entropy_report.predictive_entropy &&
         a.entropy_report.normalized_sample_probs == b.entropy_report.normalized_sample_probs &&
         memberships(a.entropy_report.clustering) == memberships(b.entropy_report.clustering) &&
         a.retrieval_steps == b.retrieval_steps && a.retrieved_doc_ids == b.retrieved_doc_ids;
}

}  // namespace sugar
