#include "sugar/eval.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "sugar/error.hpp"
#include "sugar/io.hpp"
#include "sugar/text.hpp"

namespace sugar {

using nlohmann::json;

namespace {

void require_golds(std::span<const std::string> gold_answers) {
  if (gold_answers.empty()) throw Error(Errc::no_gold_answers, "metric needs at least one gold answer");
}

double token_f1(const std::vector<std::string>& prediction, const std::vector<std::string>& gold) {
  if (prediction.empty() || gold.empty()) return prediction.empty() && gold.empty() ? 1.0 : 0.0;
  std::map<std::string, int> counts;
  for (const auto& t : gold) ++counts[t];
  int common = 0;
  for (const auto& t : prediction) {
    if (auto it = counts.find(t); it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision = static_cast<double>(common) / static_cast<double>(prediction.size());
  const double recall = static_cast<double>(common) / static_cast<double>(gold.size());
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

int exact_match(const std::string& prediction, std::span<const std::string> gold_answers) {
  require_golds(gold_answers);
  const auto p = normalize_answer(prediction);
  return std::any_of(gold_answers.begin(), gold_answers.end(), [&](const auto& g) { return normalize_answer(g) == p; })
             ? 1
             : 0;
}

double f1(const std::string& prediction, std::span<const std::string> gold_answers) {
  require_golds(gold_answers);
  const auto p = normalized_tokens(prediction);
  double best = 0.0;
  for (const auto& g : gold_answers) best = std::max(best, token_f1(p, normalized_tokens(g)));
  return best;
}

int accuracy(const std::string& prediction, std::span<const std::string> gold_answers) {
  require_golds(gold_answers);
  const auto p = normalized_tokens(prediction);
  for (const auto& g : gold_answers) {
    const auto gold = normalized_tokens(g);
    // An all-article gold normalizes to nothing; only an equally empty prediction matches it.
    if (gold.empty() ? p.empty() : contains_token_run(p, gold)) return 1;
  }
  return 0;
}

std::vector<Question> load_dataset(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) throw Error(Errc::dataset_not_found, "dataset not found: " + path.string());
  std::vector<Question> questions;
  std::unordered_set<std::string> ids;
  for_each_jsonl(read_file(path, Errc::dataset_not_found), [&](const json& j, std::size_t line) {
    const auto where = "line " + std::to_string(line) + ": ";
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("question") ||
        !j["question"].is_string()) {
      throw Error(Errc::malformed_record, where + "expected {\"id\", \"question\", \"answers\"}", line);
    }
    Question q{j["id"].get<std::string>(), j["question"].get<std::string>(), {}};
    if (trim(q.text).empty()) throw Error(Errc::malformed_record, where + "empty question text", line);
    if (!ids.insert(q.id).second) throw Error(Errc::malformed_record, where + "duplicate id \"" + q.id + "\"", line);
    if (!j.contains("answers") || !j["answers"].is_array() || j["answers"].empty()) {
      throw Error(Errc::no_gold_answers, where + "question \"" + q.id + "\" has no gold answers", line);
    }
    for (const auto& a : j["answers"]) {
      if (!a.is_string()) throw Error(Errc::malformed_record, where + "answers must be strings", line);
      q.gold_answers.push_back(a.get<std::string>());
    }
    questions.push_back(std::move(q));
  });
  return questions;
}

EvalRecord score_result(const Question& question, const PipelineResult& result) {
  EvalRecord r;
  r.question_id = question.id;
  r.prediction = result.answer;
  r.gold_answers = question.gold_answers;
  r.em = exact_match(result.answer, question.gold_answers);
  r.f1 = f1(result.answer, question.gold_answers);
  r.acc = accuracy(result.answer, question.gold_answers);
  r.mode = result.decision.mode;
  r.semantic_entropy = result.entropy_report.semantic_entropy;
  r.predictive_entropy = result.entropy_report.predictive_entropy;
  r.retrieval_steps = result.retrieval_steps;
  r.wall_time_ms = result.wall_time_ms;
  return r;
}

EvalReport aggregate(std::string dataset, std::string method, std::span<const EvalRecord> records,
                     const EvalReport* baseline) {
  EvalReport report;
  report.dataset = std::move(dataset);
  report.method = std::move(method);
  report.num_questions = records.size();
  if (records.empty()) return report;

  double em = 0, f1_sum = 0, acc = 0, steps = 0, wall = 0;
  for (const auto& r : records) {
    em += r.em;
    f1_sum += r.f1;
    acc += r.acc;
    steps += static_cast<double>(r.retrieval_steps);
    wall += static_cast<double>(r.wall_time_ms);
    if (r.failed) {
      ++report.num_failed;
      report.failed_ids.push_back(r.question_id);
      continue;
    }
    switch (r.mode) {
      case RetrievalMode::no_retrieval: ++report.mode_counts.no_retrieval; break;
      case RetrievalMode::single_step: ++report.mode_counts.single_step; break;
      case RetrievalMode::multi_step: ++report.mode_counts.multi_step; break;
    }
  }
  const auto n = static_cast<double>(records.size());
  report.em = 100.0 * em / n;
  report.f1 = 100.0 * f1_sum / n;
  report.acc = 100.0 * acc / n;
  report.mean_retrieval_steps = steps / n;
  report.mean_wall_time_ms = wall / n;
  if (baseline != nullptr && baseline->mean_wall_time_ms > 0.0) {
    report.relative_time = report.mean_wall_time_ms / baseline->mean_wall_time_ms;
  }
  return report;
}

EvalRun run_eval(const std::string& dataset, std::span<const Question> questions, const Pipeline& pipeline,
                 const RunnerOptions& runner, const EvalReport* baseline) {
  if (questions.empty()) throw Error(Errc::empty_dataset, "dataset \"" + dataset + "\" has no questions");

  EvalRun run;
  run.records.resize(questions.size());
  run.results.resize(questions.size());

  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;

  auto worker = [&] {
    for (std::size_t i; !abort && (i = next++) < questions.size();) {
      const auto& q = questions[i];
      try {
        run.results[i] = pipeline.answer_question(q);
        run.records[i] = score_result(q, run.results[i]);
      } catch (const Error& e) {
        if (runner.abort_on_unreachable && e.code() == Errc::backend_unreachable) {
          std::lock_guard lock(fatal_mutex);
          if (!fatal) fatal = std::current_exception();
          abort = true;
          return;
        }
        auto& r = run.records[i];
        r = EvalRecord{};
        r.question_id = q.id;
        r.gold_answers = q.gold_answers;
        r.failed = true;
        r.error = std::string(to_string(e.code())) + ": " + e.what();
        auto& res = run.results[i];
        res.question_id = q.id;
        if (const auto* pe = dynamic_cast<const PipelineError*>(&e)) res.trace = pe->partial_trace();
      }
    }
  };

  const auto threads = std::clamp<std::size_t>(runner.parallelism, 1, questions.size());
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  if (fatal) std::rethrow_exception(fatal);

  std::string method = "adaptive";
  const auto& cfg = pipeline.config();
  if (cfg.forced_mode) method = std::string("forced ") + std::string(to_string(*cfg.forced_mode));
  run.report = aggregate(dataset, method, run.records, baseline);
  return run;
}

std::vector<AblationRow> ablate(const std::string& dataset, std::span<const Question> questions,
                                const Generator& generator, const EntailmentBackend& entailment,
                                const Retriever* retriever, const PipelineConfig& base, double tau_se,
                                std::span<const double> tau_pe, const RunnerOptions& runner) {
  if (tau_pe.empty()) throw Error(Errc::precondition_violation, "ablation needs at least one predictive-entropy tau");

  // Single-step runs first so every arm can report time relative to it.
  std::optional<EvalReport> single_step;
  auto arm = [&](std::string name, std::optional<double> tau, PipelineConfig cfg) {
    const Pipeline pipeline(generator, entailment, retriever, cfg);
    auto run = run_eval(dataset, questions, pipeline, runner, single_step ? &*single_step : nullptr);
    run.report.method = name;
    return AblationRow{std::move(name), tau, std::move(run.report)};
  };
  auto fixed = [&](RetrievalMode mode) {
    auto cfg = base;
    cfg.forced_mode = mode;
    return cfg;
  };
  auto binary = [&](EntropySignal signal, double tau) {
    auto cfg = base;
    cfg.forced_mode.reset();
    cfg.signal = signal;
    cfg.thresholds = {tau, tau};
    return cfg;
  };
  auto tau_label = [](double tau) {
    std::ostringstream os;
    os << tau;
    return os.str();
  };

  auto single_row = arm("Single-step retrieval", std::nullopt, fixed(RetrievalMode::single_step));
  single_step = single_row.report;
  if (single_step->mean_wall_time_ms > 0.0) single_row.report.relative_time = 1.0;

  std::vector<AblationRow> rows;
  rows.push_back(arm("No retrieval", std::nullopt, fixed(RetrievalMode::no_retrieval)));
  rows.push_back(std::move(single_row));
  for (double tau : tau_pe) {
    rows.push_back(arm("Predictive entropy (tau=" + tau_label(tau) + ")", tau, binary(EntropySignal::predictive, tau)));
  }
  rows.push_back(arm("Semantic entropy (tau=" + tau_label(tau_se) + ")", tau_se, binary(EntropySignal::semantic, tau_se)));
  return rows;
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

namespace {

std::string fixed2(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << v;
  return os.str();
}

std::string render(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    width.resize(std::max(width.size(), row.size()));
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream os;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      if (c == 0) {
        os << std::left << std::setw(static_cast<int>(width[c])) << rows[r][c];
      } else {
        os << "  " << std::right << std::setw(static_cast<int>(width[c])) << rows[r][c];
      }
    }
    os << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w + 2;
      os << std::string(total - 2, '-') << '\n';
    }
  }
  return os.str();
}

std::vector<std::string> report_row(const std::string& label, const EvalReport& r) {
  return {label,
          fixed2(r.em),
          fixed2(r.f1),
          fixed2(r.acc),
          fixed2(r.mean_retrieval_steps),
          fixed2(r.mean_wall_time_ms),
          r.relative_time ? fixed2(*r.relative_time) : "-",
          std::to_string(r.num_failed)};
}

}  // namespace

std::string format_report_table(std::span<const EvalReport> reports) {
  std::vector<std::vector<std::string>> rows{{"Run", "EM", "F1", "Acc", "Steps", "Time(ms)", "RelTime", "Failed"}};
  for (const auto& r : reports) {
    rows.push_back(report_row(r.method.empty() ? r.dataset : r.dataset + " / " + r.method, r));
  }
  return render(rows);
}

std::string format_ablation_table(std::span<const AblationRow> rows) {
  std::vector<std::vector<std::string>> out{{"Method", "EM", "F1", "Acc", "Steps", "Time(ms)", "RelTime", "Failed"}};
  for (const auto& row : rows) out.push_back(report_row(row.method, row.report));
  return render(out);
}

}  // namespace sugar
