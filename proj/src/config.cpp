#include "sugar/config.hpp"

#include <cstdlib>
#include <set>

#include "sugar/error.hpp"
#include "sugar/io.hpp"

namespace sugar {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& message) { throw Error(Errc::config_error, message); }

/// Reads keys of one JSON object, remembering which were consumed so that
/// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) config_error(where() + " must be an object");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return obj_.contains(key); }

  const json* find(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key) ? &obj_[key] : nullptr;
  }

  Section child(const std::string& key) {
    static const json empty = json::object();
    const json* v = find(key);
    return Section(v ? *v : empty, key_path(key));
  }

  double number(const std::string& key, double fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number()) config_error(key_path(key) + " must be a number");
    return v->get<double>();
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_integer() || v->get<long long>() < 0) config_error(key_path(key) + " must be a non-negative integer");
    return v->get<std::size_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) config_error(key_path(key) + " must be a boolean");
    return v->get<bool>();
  }

  std::string string(const std::string& key, std::string fallback = {}) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) config_error(key_path(key) + " must be a string");
    return v->get<std::string>();
  }

  void finish() const {
    for (const auto& [key, _] : obj_.items()) {
      if (!seen_.contains(key)) config_error("unknown config key " + key_path(key));
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

BackendKind backend_kind(const std::string& value, const std::string& path) {
  if (value == "mock") return BackendKind::mock;
  if (value == "http") return BackendKind::http;
  config_error(path + " must be \"mock\" or \"http\", got \"" + value + "\"");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  const std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

RunConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  RunConfig c;
  Section root(doc, "");
  c.seed = root.count("seed", 0);

  {
    auto s = root.child("generator");
    c.generator.backend = backend_kind(s.string("backend", "mock"), s.key_path("backend"));
    c.generator.mock_scenario = resolve(base_dir, s.string("mock_scenario"));
    c.generator.url = s.string("url");
    c.generator.model = s.string("model");
    c.generator.fanout = s.count("fanout", c.generator.fanout);
    c.generator.max_retries = s.count("max_retries", c.generator.max_retries);
    c.generator.timeout_ms = static_cast<int>(s.count("timeout_ms", static_cast<std::size_t>(c.generator.timeout_ms)));
    c.generator.prompt.context_header = s.string("context_header", c.generator.prompt.context_header);
    c.generator.prompt.demo_question = s.string("demo_question", c.generator.prompt.demo_question);
    c.generator.prompt.demo_answer = s.string("demo_answer", c.generator.prompt.demo_answer);
    s.finish();
  }
  {
    auto s = root.child("entailment");
    c.entailment.backend = backend_kind(s.string("backend", "mock"), s.key_path("backend"));
    c.entailment.alias_table = resolve(base_dir, s.string("alias_table"));
    c.entailment.antonym_table = resolve(base_dir, s.string("antonym_table"));
    c.entailment.url = s.string("url");
    c.entailment.max_retries = s.count("max_retries", c.entailment.max_retries);
    c.entailment.timeout_ms = static_cast<int>(s.count("timeout_ms", static_cast<std::size_t>(c.entailment.timeout_ms)));
    s.finish();
  }
  {
    auto s = root.child("sampling");
    c.sampling.n = s.count("n", c.sampling.n);
    c.sampling.temperature = s.number("temperature", c.sampling.temperature);
    c.sampling.final_temperature = s.number("final_temperature", c.sampling.final_temperature);
    c.sampling.length_normalized = s.boolean("length_normalized", c.sampling.length_normalized);
    s.finish();
  }
  {
    auto s = root.child("router");
    c.router.thresholds.tau_low = s.number("tau_low", c.router.thresholds.tau_low);
    c.router.thresholds.tau_high = s.number("tau_high", c.router.thresholds.tau_high);
    const auto objective = s.string("objective", "accuracy");
    if (objective == "accuracy") {
      c.router.objective = CalibrationObjective::accuracy;
    } else if (objective == "f1") {
      c.router.objective = CalibrationObjective::f1;
    } else {
      config_error(s.key_path("objective") + " must be \"accuracy\" or \"f1\"");
    }
    if (const auto mode = s.string("force_mode"); !mode.empty() && mode != "auto") {
      c.router.force_mode = retrieval_mode_from_string(mode);
    }
    s.finish();
  }
  {
    auto s = root.child("multistep");
    c.max_steps = s.count("max_steps", c.max_steps);
    s.finish();
  }
  {
    auto s = root.child("retriever");
    c.retriever.k = s.count("k", c.retriever.k);
    c.retriever.index = resolve(base_dir, s.string("index"));
    c.retriever.corpus = resolve(base_dir, s.string("corpus"));
    c.retriever.bm25.k1 = s.number("k1", c.retriever.bm25.k1);
    c.retriever.bm25.b = s.number("b", c.retriever.bm25.b);
    s.finish();
  }
  {
    auto s = root.child("runner");
    c.runner.parallelism = s.count("parallelism", c.runner.parallelism);
    const auto timing = s.string("timing", "wall");
    if (timing == "wall") {
      c.runner.record_timing = true;
    } else if (timing == "off") {
      c.runner.record_timing = false;
    } else {
      config_error(s.key_path("timing") + " must be \"wall\" or \"off\"");
    }
    c.runner.abort_on_unreachable = s.boolean("abort_on_unreachable", c.runner.abort_on_unreachable);
    s.finish();
  }
  root.finish();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  const auto text = read_file(path, Errc::config_error);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    config_error("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc, path.parent_path());
}

void apply_environment(RunConfig& config) {
  auto env = [](const char* name) -> const char* {
    const char* v = std::getenv(name);
    return v != nullptr && *v != '\0' ? v : nullptr;
  };
  if (const char* v = env("SUGAR_GENERATOR_URL")) config.generator.url = v;
  if (const char* v = env("SUGAR_ENTAILMENT_URL")) config.entailment.url = v;
  if (const char* v = env("SUGAR_API_KEY")) config.generator.api_key = v;
  if (const char* v = env("SUGAR_NLI_API_KEY")) config.entailment.api_key = v;
}

void validate(const RunConfig& c) {
  validate(c.router.thresholds);
  if (c.sampling.n == 0) config_error("sampling.n must be >= 1");
  if (c.sampling.temperature < 0.0) config_error("sampling.temperature must be >= 0");
  if (c.sampling.final_temperature < 0.0) config_error("sampling.final_temperature must be >= 0");
  if (c.max_steps == 0) config_error("multistep.max_steps must be >= 1");
  if (c.retriever.k == 0) config_error("retriever.k must be >= 1");
  if (c.runner.parallelism == 0) config_error("runner.parallelism must be >= 1");
  if (c.generator.backend == BackendKind::mock && c.generator.mock_scenario.empty()) {
    config_error("missing required key generator.mock_scenario");
  }
  if (c.generator.backend == BackendKind::http) {
    if (c.generator.url.empty()) config_error("missing required key generator.url");
    if (c.generator.model.empty()) config_error("missing required key generator.model");
  }
  if (c.entailment.backend == BackendKind::http && c.entailment.url.empty()) {
    config_error("missing required key entailment.url");
  }
  if (!c.retriever.index.empty() && !c.retriever.corpus.empty()) {
    config_error("retriever.index and retriever.corpus are mutually exclusive");
  }
}

json to_json(const RunConfig& c) {
  auto kind = [](BackendKind k) { return k == BackendKind::mock ? "mock" : "http"; };
  json j = {
      {"seed", c.seed},
      {"generator",
       {{"backend", kind(c.generator.backend)},
        {"mock_scenario", c.generator.mock_scenario.string()},
        {"url", c.generator.url},
        {"model", c.generator.model},
        {"fanout", c.generator.fanout},
        {"max_retries", c.generator.max_retries},
        {"timeout_ms", c.generator.timeout_ms},
        {"context_header", c.generator.prompt.context_header},
        {"demo_question", c.generator.prompt.demo_question},
        {"demo_answer", c.generator.prompt.demo_answer}}},
      {"entailment",
       {{"backend", kind(c.entailment.backend)},
        {"alias_table", c.entailment.alias_table.string()},
        {"antonym_table", c.entailment.antonym_table.string()},
        {"url", c.entailment.url},
        {"max_retries", c.entailment.max_retries},
        {"timeout_ms", c.entailment.timeout_ms}}},
      {"sampling",
       {{"n", c.sampling.n},
        {"temperature", c.sampling.temperature},
        {"final_temperature", c.sampling.final_temperature},
        {"length_normalized", c.sampling.length_normalized}}},
      {"router",
       {{"tau_low", c.router.thresholds.tau_low},
        {"tau_high", c.router.thresholds.tau_high},
        {"objective", c.router.objective == CalibrationObjective::accuracy ? "accuracy" : "f1"},
        {"force_mode", c.router.force_mode ? std::string(to_string(*c.router.force_mode)) : "auto"}}},
      {"multistep", {{"max_steps", c.max_steps}}},
      {"retriever",
       {{"k", c.retriever.k},
        {"index", c.retriever.index.string()},
        {"corpus", c.retriever.corpus.string()},
        {"k1", c.retriever.bm25.k1},
        {"b", c.retriever.bm25.b}}},
      {"runner",
       {{"parallelism", c.runner.parallelism},
        {"timing", c.runner.record_timing ? "wall" : "off"},
        {"abort_on_unreachable", c.runner.abort_on_unreachable}}},
  };
  return j;
}

PipelineConfig pipeline_config(const RunConfig& c) {
  PipelineConfig p;
  p.num_samples = c.sampling.n;
  p.sample_temperature = c.sampling.temperature;
  p.length_normalized = c.sampling.length_normalized;
  p.thresholds = c.router.thresholds;
  p.forced_mode = c.router.force_mode;
  p.max_steps = c.max_steps;
  p.top_k = c.retriever.k;
  p.seed = c.seed;
  p.record_timing = c.runner.record_timing;
  return p;
}

RunnerOptions runner_options(const RunConfig& c) {
  return {c.runner.parallelism, c.runner.abort_on_unreachable};
}

Backends make_backends(const RunConfig& c) {
  Backends b;
  if (c.generator.backend == BackendKind::mock) {
    b.generator = std::make_unique<MockGenerator>(MockScenario::load(c.generator.mock_scenario));
  } else {
    HttpGeneratorOptions opts;
    opts.endpoint = {c.generator.url, c.generator.api_key, c.generator.timeout_ms, c.generator.max_retries};
    opts.model = c.generator.model;
    opts.prompt = c.generator.prompt;
    opts.greedy_temperature = c.sampling.final_temperature;
    opts.fanout = c.generator.fanout;
    b.generator = std::make_unique<HttpGenerator>(std::move(opts));
  }

  if (c.entailment.backend == BackendKind::mock) {
    PhraseTable aliases, antonyms;
    if (!c.entailment.alias_table.empty()) aliases = load_phrase_table(c.entailment.alias_table);
    if (!c.entailment.antonym_table.empty()) antonyms = load_phrase_table(c.entailment.antonym_table);
    b.entailment = std::make_unique<MockEntailment>(std::move(aliases), std::move(antonyms));
  } else {
    b.entailment = std::make_unique<HttpEntailment>(HttpEntailmentOptions{
        {c.entailment.url, c.entailment.api_key, c.entailment.timeout_ms, c.entailment.max_retries}});
  }

  if (!c.retriever.index.empty()) {
    b.retriever = std::make_unique<Bm25Index>(Bm25Index::load(c.retriever.index));
  } else if (!c.retriever.corpus.empty()) {
    b.retriever = std::make_unique<Bm25Index>(c.retriever.bm25);
    b.retriever->ingest_corpus(c.retriever.corpus);
  }
  return b;
}

}  // namespace sugar
