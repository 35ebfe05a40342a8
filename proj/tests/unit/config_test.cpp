#include <cstdlib>

#include "doctest.h"
#include "json.hpp"
#include "sugar/config.hpp"
#include "sugar/error.hpp"
#include "sugar/trace.hpp"
#include "support.hpp"

using namespace sugar;
using namespace sugar::testing;
using nlohmann::json;

namespace {

std::string config_error_of(const json& doc) {
  try {
    validate(parse_config(doc, "/base"));
  } catch (const Error& e) {
    CHECK(e.code() == Errc::config_error);
    CHECK(exit_code_for(e.code()) == kExitUsage);
    return e.what();
  }
  return {};
}

json minimal() { return {{"generator", {{"mock_scenario", "s.json"}}}}; }

}  // namespace

TEST_CASE("minimal config takes documented defaults") {
  const auto c = parse_config(minimal(), "/base");
  CHECK(c.generator.backend == BackendKind::mock);
  CHECK(c.generator.mock_scenario == std::filesystem::path("/base/s.json"));
  CHECK(c.sampling.n == 10);
  CHECK(c.sampling.temperature == 1.0);
  CHECK(c.router.thresholds == Thresholds{0.4, 0.9});
  CHECK(c.max_steps == 3);
  CHECK(c.retriever.k == 5);
  CHECK(c.retriever.bm25.k1 == 1.2);
  CHECK(c.retriever.bm25.b == 0.75);
  CHECK_NOTHROW(validate(c));
}

TEST_CASE("config errors name the key") {
  auto doc = minimal();
  doc["router"] = {{"tau_lo", 0.1}};
  CHECK(config_error_of(doc).find("router.tau_lo") != std::string::npos);

  doc = minimal();
  doc["sampling"] = {{"n", "ten"}};
  CHECK(config_error_of(doc).find("sampling.n") != std::string::npos);

  CHECK(config_error_of(json::object()).find("generator.mock_scenario") != std::string::npos);

  doc = minimal();
  doc["generator"]["backend"] = "http";
  CHECK(config_error_of(doc).find("generator.url") != std::string::npos);

  doc = minimal();
  doc["router"] = {{"tau_low", 0.9}, {"tau_high", 0.4}};
  try {
    validate(parse_config(doc));
    FAIL("expected invalid thresholds");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("tau_low > tau_high") != std::string::npos);
    CHECK(exit_code_for(e.code()) == kExitUsage);
  }

  doc = minimal();
  doc["retriever"] = {{"index", "i"}, {"corpus", "c"}};
  CHECK_FALSE(config_error_of(doc).empty());
}

TEST_CASE("environment overrides backend endpoints") {
  auto doc = minimal();
  doc["generator"]["backend"] = "http";
  doc["generator"]["url"] = "http://from-file";
  doc["generator"]["model"] = "m";
  auto c = parse_config(doc);
  ::setenv("SUGAR_GENERATOR_URL", "http://from-env", 1);
  ::setenv("SUGAR_API_KEY", "k1", 1);
  apply_environment(c);
  ::unsetenv("SUGAR_GENERATOR_URL");
  ::unsetenv("SUGAR_API_KEY");
  CHECK(c.generator.url == "http://from-env");
  CHECK(c.generator.api_key == "k1");
}

TEST_CASE("config round-trips through JSON") {
  auto doc = minimal();
  doc["seed"] = 99;
  doc["router"] = {{"tau_low", 0.3}, {"tau_high", 1.1}, {"force_mode", "multi"}};
  doc["runner"] = {{"timing", "off"}, {"parallelism", 2}};
  const auto c = parse_config(doc, "/base");
  const auto again = parse_config(to_json(c), "/elsewhere");
  CHECK(to_json(again) == to_json(c));
  const auto p = pipeline_config(c);
  CHECK(p.seed == 99);
  CHECK(p.forced_mode == RetrievalMode::multi_step);
  CHECK_FALSE(p.record_timing);
  CHECK(runner_options(c).parallelism == 2);
}

TEST_CASE("load_config resolves paths against the file") {
  const TempDir dir;
  const auto path = dir.write("c.json", R"({"generator": {"mock_scenario": "sub/s.json"}})");
  CHECK(load_config(path).generator.mock_scenario == dir.path() / "sub/s.json");
  dir.write("bad.json", "{");
  CHECK_THROWS_AS(load_config(dir.path() / "bad.json"), Error);
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(Errc::config_error) == 2);
  CHECK(exit_code_for(Errc::invalid_thresholds) == 2);
  CHECK(exit_code_for(Errc::malformed_record) == 3);
  CHECK(exit_code_for(Errc::dataset_not_found) == 2);
  CHECK(exit_code_for(Errc::backend_unreachable) == 4);
  CHECK(exit_code_for(Errc::malformed_backend_response) == 4);
}

TEST_CASE("trace replay serves recorded calls in order") {
  TraceLog log(false);
  const MockGenerator inner(MockScenario::parse(R"({"q": [["A", 0.5], ["B", 0.5]]})"));
  const RecordingGenerator g(inner, log);
  const GenerationRequest req{{"q", "x", {}}, {}, 4, 1.0, 3};
  const auto first = g.sample_answers(req);
  const auto greedy = g.greedy_answer(req.question, {});
  const auto events = log.events();
  REQUIRE(events.size() == 2);
  CHECK(events[0].at("latency_ms") == 0.0);

  const TraceReplay replay(events);
  const auto again = replay.generator().sample_answers(req);
  REQUIRE(again.size() == first.size());
  for (std::size_t i = 0; i < first.size(); ++i) CHECK(again[i].text == first[i].text);
  CHECK_FALSE(replay.exhausted());
  CHECK(replay.generator().greedy_answer(req.question, {}).text == greedy.text);
  CHECK(replay.exhausted());
  CHECK_THROWS_AS(replay.generator().greedy_answer(req.question, {}), Error);
}
