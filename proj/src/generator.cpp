#include "sugar/generator.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"
#include "sugar/error.hpp"
#include "sugar/io.hpp"
#include "sugar/random.hpp"
#include "sugar/text.hpp"

namespace sugar {

using nlohmann::json;

AnswerSample AnswerSample::from_tokens(std::string text, std::vector<double> token_logprobs) {
  if (token_logprobs.empty()) {
    throw Error(Errc::precondition_violation, "answer sample needs at least one token log-prob");
  }
  for (double lp : token_logprobs) {
    if (!(lp <= 0.0)) {
      throw Error(Errc::precondition_violation, "token log-prob must be <= 0, got " + std::to_string(lp));
    }
  }
  AnswerSample s;
  s.text = std::move(text);
  s.total_logprob = std::accumulate(token_logprobs.begin(), token_logprobs.end(), 0.0);
  s.token_logprobs = std::move(token_logprobs);
  return s;
}

std::string PromptTemplate::render(const Question& question, std::span<const std::string> context_documents) const {
  std::string prompt;
  if (!context_documents.empty()) {
    prompt += context_header;
    prompt += '\n';
    for (const auto& doc : context_documents) {
      prompt += doc;
      prompt += '\n';
    }
    prompt += '\n';
  }
  if (!demo_question.empty() && !demo_answer.empty()) {
    prompt += "Q: " + demo_question + " A: " + demo_answer + "\n";
  }
  prompt += "Q: " + question.text + " A:";
  return prompt;
}

// ---------------------------------------------------------------------------
// Scenario parsing
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void scenario_error(const std::string& where, const std::string& what) {
  throw Error(Errc::config_error, "mock scenario " + where + ": " + what);
}

std::vector<double> synthetic_logprobs(const std::string& text, double probability) {
  std::istringstream words(text);
  std::size_t count = 0;
  for (std::string w; words >> w;) ++count;
  count = std::max<std::size_t>(count, 1);
  return std::vector<double>(count, std::log(probability) / static_cast<double>(count));
}

PoolEntry parse_entry(const json& j, const std::string& where) {
  PoolEntry e;
  const json* logprobs = nullptr;
  if (j.is_array()) {
    if (j.size() < 2 || j.size() > 3 || !j[0].is_string() || !j[1].is_number()) {
      scenario_error(where, "pool entry must be [text, probability, (token_logprobs)]");
    }
    e.text = j[0].get<std::string>();
    e.probability = j[1].get<double>();
    if (j.size() == 3) logprobs = &j[2];
  } else if (j.is_object()) {
    if (!j.contains("text") || !j["text"].is_string()) scenario_error(where, "pool entry missing \"text\"");
    e.text = j["text"].get<std::string>();
    const char* prob_key = j.contains("prob") ? "prob" : "probability";
    if (!j.contains(prob_key) || !j[prob_key].is_number()) scenario_error(where, "pool entry missing \"prob\"");
    e.probability = j[prob_key].get<double>();
    if (j.contains("token_logprobs")) logprobs = &j["token_logprobs"];
  } else {
    scenario_error(where, "pool entry must be an object or array");
  }
  if (!(e.probability > 0.0 && e.probability <= 1.0)) {
    scenario_error(where, "probability of \"" + e.text + "\" must lie in (0, 1]");
  }
  if (logprobs != nullptr) {
    if (!logprobs->is_array() || logprobs->empty()) scenario_error(where, "token_logprobs must be a non-empty array");
    for (const auto& v : *logprobs) {
      if (!v.is_number() || v.get<double>() > 0.0) scenario_error(where, "token_logprobs must be numbers <= 0");
      e.token_logprobs.push_back(v.get<double>());
    }
  } else {
    e.token_logprobs = synthetic_logprobs(e.text, e.probability);
  }
  return e;
}

std::vector<PoolEntry> parse_pool(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) scenario_error(where, "pool must be a non-empty array");
  std::vector<PoolEntry> pool;
  double total = 0.0;
  for (const auto& entry : j) {
    pool.push_back(parse_entry(entry, where));
    total += pool.back().probability;
  }
  if (std::abs(total - 1.0) > 1e-6) {
    scenario_error(where, "pool probabilities sum to " + std::to_string(total) + ", expected 1");
  }
  return pool;
}

ScriptedQuestion parse_question(const json& j, const std::string& id) {
  ScriptedQuestion q;
  if (j.is_array()) {
    q.pool = parse_pool(j, id);
    return q;
  }
  if (!j.is_object() || !j.contains("pool")) scenario_error(id, "expected a pool array or {\"pool\", \"with_context\"}");
  q.pool = parse_pool(j["pool"], id);
  if (j.contains("with_context")) {
    const auto& rules = j["with_context"];
    if (!rules.is_array()) scenario_error(id, "with_context must be an array");
    for (std::size_t i = 0; i < rules.size(); ++i) {
      const auto where = id + ".with_context[" + std::to_string(i) + "]";
      const auto& r = rules[i];
      if (!r.is_object() || !r.contains("when_context_contains") || !r["when_context_contains"].is_string()) {
        scenario_error(where, "rule needs a \"when_context_contains\" string");
      }
      if (!r.contains("pool")) scenario_error(where, "rule needs a \"pool\"");
      q.with_context.push_back({r["when_context_contains"].get<std::string>(), parse_pool(r["pool"], where)});
    }
  }
  return q;
}

}  // namespace

MockScenario MockScenario::parse(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(Errc::config_error, std::string("mock scenario is not valid JSON: ") + e.what());
  }
  const json& questions = doc.is_object() && doc.contains("questions") ? doc["questions"] : doc;
  if (!questions.is_object()) scenario_error("root", "expected an object mapping question id to pool");
  MockScenario scenario;
  for (const auto& [id, value] : questions.items()) {
    scenario.questions.emplace(id, parse_question(value, id));
  }
  return scenario;
}

MockScenario MockScenario::load(const std::filesystem::path& path) {
  return parse(read_file(path, Errc::config_error));
}

// ---------------------------------------------------------------------------
// MockGenerator
// ---------------------------------------------------------------------------

namespace {

AnswerSample to_sample(const PoolEntry& e) { return AnswerSample::from_tokens(e.text, e.token_logprobs); }

const PoolEntry& greedy_entry(const std::vector<PoolEntry>& pool) {
  return *std::min_element(pool.begin(), pool.end(), [](const PoolEntry& a, const PoolEntry& b) {
    if (a.probability != b.probability) return a.probability > b.probability;
    return a.text < b.text;
  });
}

/// Largest-remainder apportionment of `n` draws over `weights`.
std::vector<std::size_t> apportion(const std::vector<double>& weights, std::size_t n, std::mt19937_64& rng) {
  constexpr double kSlack = 1e-9;
  const std::size_t m = weights.size();
  std::vector<std::size_t> counts(m);
  std::vector<double> remainders(m);
  std::size_t assigned = 0;
  for (std::size_t j = 0; j < m; ++j) {
    const double quota = static_cast<double>(n) * weights[j];
    counts[j] = static_cast<std::size_t>(std::floor(quota + kSlack));
    remainders[j] = std::max(0.0, quota - static_cast<double>(counts[j]));
    assigned += counts[j];
  }
  // Slack can over-assign by one draw in pathological rounding cases.
  while (assigned > n) {
    const auto j = static_cast<std::size_t>(std::distance(
        counts.begin(), std::max_element(counts.begin(), counts.end())));
    --counts[j];
    --assigned;
  }
  std::vector<std::uint64_t> tie_keys(m);
  for (auto& k : tie_keys) k = rng();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (std::abs(remainders[a] - remainders[b]) > kSlack) return remainders[a] > remainders[b];
    return tie_keys[a] < tie_keys[b];
  });
  for (std::size_t i = 0; assigned < n; i = (i + 1) % m, ++assigned) ++counts[order[i]];
  return counts;
}

}  // namespace

MockGenerator::MockGenerator(MockScenario scenario) : scenario_(std::move(scenario)) {}

const std::vector<PoolEntry>& MockGenerator::active_pool(const Question& question,
                                                         std::span<const std::string> context_documents) const {
  const auto it = scenario_.questions.find(question.id);
  if (it == scenario_.questions.end()) {
    throw Error(Errc::unknown_question, "mock scenario has no entry for question id \"" + question.id + "\"");
  }
  const auto& scripted = it->second;
  if (!context_documents.empty()) {
    std::vector<std::vector<std::string>> doc_tokens;
    doc_tokens.reserve(context_documents.size());
    for (const auto& d : context_documents) doc_tokens.push_back(normalized_tokens(d));
    for (const auto& rule : scripted.with_context) {
      const auto needle = normalized_tokens(rule.when_context_contains);
      for (const auto& tokens : doc_tokens) {
        if (contains_token_run(tokens, needle)) return rule.pool;
      }
    }
  }
  return scripted.pool;
}

std::vector<AnswerSample> MockGenerator::sample_answers(const GenerationRequest& req) const {
  if (req.num_samples == 0) throw Error(Errc::precondition_violation, "num_samples must be >= 1");
  if (!(req.temperature >= 0.0)) throw Error(Errc::precondition_violation, "temperature must be >= 0");

  const auto& pool = active_pool(req.question, req.context_documents);
  if (req.temperature == 0.0) {
    return std::vector<AnswerSample>(req.num_samples, to_sample(greedy_entry(pool)));
  }

  // p^(1/T), renormalized in log space.
  std::vector<double> weights(pool.size());
  double max_scaled = -INFINITY;
  for (std::size_t j = 0; j < pool.size(); ++j) {
    weights[j] = std::log(pool[j].probability) / req.temperature;
    max_scaled = std::max(max_scaled, weights[j]);
  }
  double z = 0.0;
  for (auto& w : weights) z += (w = std::exp(w - max_scaled));
  for (auto& w : weights) w /= z;

  std::mt19937_64 rng(derive_seed(req.seed, fnv1a(req.question.id)));
  const auto counts = apportion(weights, req.num_samples, rng);
  std::vector<std::size_t> draws;
  draws.reserve(req.num_samples);
  for (std::size_t j = 0; j < pool.size(); ++j) draws.insert(draws.end(), counts[j], j);
  seeded_shuffle(draws, rng);

  std::vector<AnswerSample> samples;
  samples.reserve(draws.size());
  for (std::size_t j : draws) samples.push_back(to_sample(pool[j]));
  return samples;
}

AnswerSample MockGenerator::greedy_answer(const Question& question,
                                          std::span<const std::string> context_documents) const {
  return to_sample(greedy_entry(active_pool(question, context_documents)));
}

// ---------------------------------------------------------------------------
// HttpGenerator
// ---------------------------------------------------------------------------

std::vector<AnswerSample> parse_completions_response(const std::string& body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(Errc::malformed_backend_response, std::string("completions response is not JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty()) {
    throw Error(Errc::malformed_backend_response, "completions response has no choices");
  }
  std::vector<AnswerSample> samples;
  for (const auto& choice : doc["choices"]) {
    if (!choice.is_object() || !choice.contains("text") || !choice["text"].is_string()) {
      throw Error(Errc::malformed_backend_response, "completion choice has no text");
    }
    const auto* logprobs = choice.contains("logprobs") ? &choice["logprobs"] : nullptr;
    if (logprobs == nullptr || !logprobs->is_object() || !logprobs->contains("token_logprobs") ||
        !(*logprobs)["token_logprobs"].is_array() || (*logprobs)["token_logprobs"].empty()) {
      throw Error(Errc::malformed_backend_response, "completion choice is missing per-token log-probs");
    }
    std::vector<double> values;
    for (const auto& v : (*logprobs)["token_logprobs"]) {
      if (!v.is_number()) throw Error(Errc::malformed_backend_response, "non-numeric token log-prob");
      double lp = v.get<double>();
      if (lp > 1e-6) throw Error(Errc::malformed_backend_response, "positive token log-prob " + std::to_string(lp));
      values.push_back(std::min(lp, 0.0));
    }
    samples.push_back(AnswerSample::from_tokens(std::string(trim(choice["text"].get<std::string>())), std::move(values)));
  }
  return samples;
}

HttpGenerator::HttpGenerator(HttpGeneratorOptions options) : options_(std::move(options)) {
  options_.fanout = std::max<std::size_t>(options_.fanout, 1);
}

std::vector<AnswerSample> HttpGenerator::complete(const std::string& prompt, std::size_t n, double temperature,
                                                  std::uint64_t seed) const {
  const json body = {
      {"model", options_.model},
      {"prompt", prompt},
      {"n", n},
      {"temperature", temperature},
      {"logprobs", true},
      {"seed", static_cast<std::int64_t>(seed & 0x7fffffffULL)},
      {"max_tokens", options_.max_tokens},
      {"stop", json::array({"\n"})},
  };
  auto samples = parse_completions_response(post_json(options_.endpoint, body.dump()));
  if (samples.size() != n) {
    throw Error(Errc::malformed_backend_response,
                "requested " + std::to_string(n) + " completions, got " + std::to_string(samples.size()));
  }
  return samples;
}

std::vector<AnswerSample> HttpGenerator::sample_answers(const GenerationRequest& req) const {
  if (req.num_samples == 0) throw Error(Errc::precondition_violation, "num_samples must be >= 1");
  if (!(req.temperature >= 0.0)) throw Error(Errc::precondition_violation, "temperature must be >= 0");
  const auto prompt = options_.prompt.render(req.question, req.context_documents);

  const std::size_t chunks = std::min(options_.fanout, req.num_samples);
  if (chunks == 1) return complete(prompt, req.num_samples, req.temperature, req.seed);

  std::vector<std::future<std::vector<AnswerSample>>> pending;
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t n = req.num_samples / chunks + (c < req.num_samples % chunks ? 1 : 0);
    pending.push_back(std::async(std::launch::async, [this, &prompt, n, &req, c] {
      return complete(prompt, n, req.temperature, derive_seed(req.seed, c));
    }));
  }
  std::vector<AnswerSample> samples;
  samples.reserve(req.num_samples);
  for (auto& f : pending) {
    auto part = f.get();
    std::move(part.begin(), part.end(), std::back_inserter(samples));
  }
  return samples;
}

AnswerSample HttpGenerator::greedy_answer(const Question& question,
                                          std::span<const std::string> context_documents) const {
  return complete(options_.prompt.render(question, context_documents), 1, options_.greedy_temperature, 0).front();
}

}  // namespace sugar
