#include "sugar/io.hpp"

#include <fstream>
#include <sstream>

#include "sugar/text.hpp"

namespace sugar {

using nlohmann::json;

namespace {

[[noreturn]] void malformed(const std::string& what) { throw Error(Errc::malformed_record, what); }

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    malformed(std::string(what) + ": " + e.what());
  }
}

}  // namespace

json to_json(const AnswerSample& s) {
  return {{"text", s.text},
          {"token_logprobs", s.token_logprobs},
          {"total_logprob", s.total_logprob},
          {"token_count", s.token_count()}};
}

AnswerSample answer_sample_from_json(const json& j) {
  return guarded("answer sample", [&] {
    auto s = AnswerSample::from_tokens(j.at("text").get<std::string>(), j.at("token_logprobs").get<std::vector<double>>());
    // Keep the recorded total bit-for-bit rather than re-summing.
    if (j.contains("total_logprob")) s.total_logprob = j["total_logprob"].get<double>();
    return s;
  });
}

json to_json(const Document& d) { return {{"doc_id", d.doc_id}, {"title", d.title}, {"text", d.text}}; }

Document document_from_json(const json& j) {
  return guarded("document", [&] {
    return Document{j.at("doc_id").get<std::string>(), j.value("title", std::string{}), j.at("text").get<std::string>()};
  });
}

json to_json(const Clustering& c) {
  json clusters = json::array();
  for (const auto& cl : c.clusters) {
    json entry = {{"member_indices", cl.member_indices}, {"representative_index", cl.representative_index()}};
    entry["log_prob"] = cl.log_prob ? json(*cl.log_prob) : json(nullptr);
    clusters.push_back(std::move(entry));
  }
  return {{"clusters", std::move(clusters)}, {"num_samples", c.num_samples}};
}

Clustering clustering_from_json(const json& j) {
  return guarded("clustering", [&] {
    Clustering c;
    c.num_samples = j.at("num_samples").get<std::size_t>();
    for (const auto& cl : j.at("clusters")) {
      SemanticCluster s;
      s.member_indices = cl.at("member_indices").get<std::vector<std::size_t>>();
      if (s.member_indices.empty()) malformed("cluster without members");
      if (cl.contains("log_prob") && !cl["log_prob"].is_null()) s.log_prob = cl["log_prob"].get<double>();
      c.clusters.push_back(std::move(s));
    }
    return c;
  });
}

json to_json(const EntropyReport& r) {
  return {{"semantic_entropy", r.semantic_entropy},
          {"predictive_entropy", r.predictive_entropy},
          {"clustering", to_json(r.clustering)},
          {"normalized_sample_probs", r.normalized_sample_probs},
          {"length_normalized", r.length_normalized}};
}

EntropyReport entropy_report_from_json(const json& j) {
  return guarded("entropy report", [&] {
    EntropyReport r;
    r.semantic_entropy = j.at("semantic_entropy").get<double>();
    r.predictive_entropy = j.at("predictive_entropy").get<double>();
    r.clustering = clustering_from_json(j.at("clustering"));
    r.normalized_sample_probs = j.at("normalized_sample_probs").get<std::vector<double>>();
    r.length_normalized = j.at("length_normalized").get<bool>();
    return r;
  });
}

json to_json(const Thresholds& t) { return {{"tau_low", t.tau_low}, {"tau_high", t.tau_high}}; }

json to_json(const RetrievalDecision& d) {
  return {{"mode", to_string(d.mode)}, {"entropy", d.entropy}, {"thresholds", to_json(d.thresholds)}};
}

RetrievalDecision retrieval_decision_from_json(const json& j) {
  return guarded("retrieval decision", [&] {
    RetrievalDecision d;
    d.mode = retrieval_mode_from_string(j.at("mode").get<std::string>());
    d.entropy = j.at("entropy").get<double>();
    d.thresholds = {j.at("thresholds").at("tau_low").get<double>(), j.at("thresholds").at("tau_high").get<double>()};
    return d;
  });
}

json to_json(const PipelineResult& r) {
  return {{"question_id", r.question_id},
          {"answer", r.answer},
          {"decision", to_json(r.decision)},
          {"entropy_report", to_json(r.entropy_report)},
          {"retrieval_steps", r.retrieval_steps},
          {"retrieved_doc_ids", r.retrieved_doc_ids},
          {"wall_time_ms", r.wall_time_ms},
          {"trace", r.trace}};
}

PipelineResult pipeline_result_from_json(const json& j) {
  return guarded("pipeline result", [&] {
    PipelineResult r;
    r.question_id = j.at("question_id").get<std::string>();
    r.answer = j.at("answer").get<std::string>();
    r.decision = retrieval_decision_from_json(j.at("decision"));
    r.entropy_report = entropy_report_from_json(j.at("entropy_report"));
    r.retrieval_steps = j.at("retrieval_steps").get<std::size_t>();
    r.retrieved_doc_ids = j.at("retrieved_doc_ids").get<std::vector<std::vector<std::string>>>();
    r.wall_time_ms = j.at("wall_time_ms").get<std::int64_t>();
    r.trace = j.at("trace").get<std::vector<json>>();
    return r;
  });
}

json to_json(const EvalRecord& r) {
  json j = {{"question_id", r.question_id},
            {"prediction", r.prediction},
            {"gold_answers", r.gold_answers},
            {"em", r.em},
            {"f1", r.f1},
            {"acc", r.acc},
            {"mode", to_string(r.mode)},
            {"semantic_entropy", r.semantic_entropy},
            {"predictive_entropy", r.predictive_entropy},
            {"retrieval_steps", r.retrieval_steps},
            {"wall_time_ms", r.wall_time_ms},
            {"failed", r.failed}};
  if (r.failed) j["error"] = r.error;
  return j;
}

EvalRecord eval_record_from_json(const json& j) {
  return guarded("eval record", [&] {
    EvalRecord r;
    r.question_id = j.at("question_id").get<std::string>();
    r.prediction = j.at("prediction").get<std::string>();
    r.gold_answers = j.at("gold_answers").get<std::vector<std::string>>();
    r.em = j.at("em").get<int>();
    r.f1 = j.at("f1").get<double>();
    r.acc = j.at("acc").get<int>();
    r.mode = retrieval_mode_from_string(j.at("mode").get<std::string>());
    r.semantic_entropy = j.at("semantic_entropy").get<double>();
    r.predictive_entropy = j.at("predictive_entropy").get<double>();
    r.retrieval_steps = j.at("retrieval_steps").get<std::size_t>();
    r.wall_time_ms = j.at("wall_time_ms").get<std::int64_t>();
    r.failed = j.at("failed").get<bool>();
    r.error = j.value("error", std::string{});
    return r;
  });
}

json to_json(const EvalReport& r) {
  json j = {{"dataset", r.dataset},
            {"method", r.method},
            {"num_questions", r.num_questions},
            {"num_failed", r.num_failed},
            {"em", r.em},
            {"f1", r.f1},
            {"acc", r.acc},
            {"mean_retrieval_steps", r.mean_retrieval_steps},
            {"mean_wall_time_ms", r.mean_wall_time_ms},
            {"mode_counts",
             {{"no_retrieval", r.mode_counts.no_retrieval},
              {"single_step", r.mode_counts.single_step},
              {"multi_step", r.mode_counts.multi_step}}},
            {"failed_ids", r.failed_ids}};
  j["relative_time"] = r.relative_time ? json(*r.relative_time) : json(nullptr);
  return j;
}

EvalReport eval_report_from_json(const json& j) {
  return guarded("eval report", [&] {
    EvalReport r;
    r.dataset = j.at("dataset").get<std::string>();
    r.method = j.value("method", std::string{});
    r.num_questions = j.at("num_questions").get<std::size_t>();
    r.num_failed = j.at("num_failed").get<std::size_t>();
    r.em = j.at("em").get<double>();
    r.f1 = j.at("f1").get<double>();
    r.acc = j.at("acc").get<double>();
    r.mean_retrieval_steps = j.at("mean_retrieval_steps").get<double>();
    r.mean_wall_time_ms = j.at("mean_wall_time_ms").get<double>();
    if (j.contains("relative_time") && !j["relative_time"].is_null()) r.relative_time = j["relative_time"].get<double>();
    const auto& counts = j.at("mode_counts");
    r.mode_counts = {counts.at("no_retrieval").get<std::size_t>(), counts.at("single_step").get<std::size_t>(),
                     counts.at("multi_step").get<std::size_t>()};
    r.failed_ids = j.value("failed_ids", std::vector<std::string>{});
    return r;
  });
}

json to_json(const CalibrationRecord& r) {
  json j = {{"entropy", r.entropy},
            {"correct_none", r.correct_none},
            {"correct_single", r.correct_single},
            {"correct_multi", r.correct_multi}};
  if (r.f1_none) j["f1_none"] = *r.f1_none;
  if (r.f1_single) j["f1_single"] = *r.f1_single;
  if (r.f1_multi) j["f1_multi"] = *r.f1_multi;
  if (r.multi_steps) j["multi_steps"] = *r.multi_steps;
  return j;
}

CalibrationRecord calibration_record_from_json(const json& j) {
  return guarded("calibration record", [&] {
    CalibrationRecord r;
    r.entropy = j.at("entropy").get<double>();
    r.correct_none = j.at("correct_none").get<bool>();
    r.correct_single = j.at("correct_single").get<bool>();
    r.correct_multi = j.at("correct_multi").get<bool>();
    if (j.contains("f1_none")) r.f1_none = j["f1_none"].get<double>();
    if (j.contains("f1_single")) r.f1_single = j["f1_single"].get<double>();
    if (j.contains("f1_multi")) r.f1_multi = j["f1_multi"].get<double>();
    if (j.contains("multi_steps")) r.multi_steps = j["multi_steps"].get<std::size_t>();
    return r;
  });
}

void for_each_jsonl(std::string_view text, const std::function<void(const json&, std::size_t)>& on_line) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto end = text.find('\n');
    const auto line = text.substr(0, end);
    text = end == std::string_view::npos ? std::string_view{} : text.substr(end + 1);
    if (trim(line).empty()) continue;
    json value;
    try {
      value = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(Errc::malformed_record, "line " + std::to_string(line_no) + ": invalid JSON (" + e.what() + ")",
                  line_no);
    }
    try {
      on_line(value, line_no);
    } catch (const Error& e) {
      if (e.line()) throw;
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
}

std::string read_file(const std::filesystem::path& path, Errc missing) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(missing, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::config_error, "cannot write " + path.string());
  out << contents;
  if (!out) throw Error(Errc::config_error, "failed writing " + path.string());
}

std::string to_jsonl(std::span<const json> values) {
  std::string out;
  for (const auto& v : values) {
    out += v.dump();
    out += '\n';
  }
  return out;
}

std::vector<CalibrationRecord> load_calibration_records(const std::filesystem::path& path) {
  std::vector<CalibrationRecord> records;
  for_each_jsonl(read_file(path, Errc::dataset_not_found),
                 [&](const json& j, std::size_t) { records.push_back(calibration_record_from_json(j)); });
  return records;
}

}  // namespace sugar
