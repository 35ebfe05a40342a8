#include <cmath>
#include <set>

#include "doctest.h"
#include "sugar/io.hpp"
#include "sugar/orchestrator.hpp"
#include "support.hpp"
#include "world.hpp"

using namespace sugar;
using namespace sugar::testing;

namespace {

const Question& question(const std::string& id) {
  static const auto qs = World::questions();
  for (const auto& q : qs) {
    if (q.id == id) return q;
  }
  throw std::out_of_range(id);
}

std::size_t count_events(const PipelineResult& r, const std::string& type) {
  std::size_t n = 0;
  for (const auto& e : r.trace) n += e.at("type") == type;
  return n;
}

}  // namespace

TEST_CASE("confident question answers closed-book") {
  const World w;
  const auto r = w.pipeline().answer_question(question("easy"));
  CHECK(r.decision.mode == RetrievalMode::no_retrieval);
  CHECK(r.answer == "Paris");
  CHECK(r.retrieval_steps == 0);
  CHECK(r.retrieved_doc_ids.empty());
  CHECK(r.entropy_report.semantic_entropy == 0.0);
  CHECK(count_events(r, "retrieve") == 0);
}

TEST_CASE("two-way split retrieves once") {
  const World w;
  const auto r = w.pipeline().answer_question(question("split"));
  CHECK(r.decision.mode == RetrievalMode::single_step);
  CHECK(std::abs(r.decision.entropy - std::log(2.0)) < 1e-12);
  CHECK(r.retrieval_steps == 1);
  REQUIRE(r.retrieved_doc_ids.size() == 1);
  CHECK(r.retrieved_doc_ids[0].front() == "tree");
  CHECK(r.answer == "Elm");
  CHECK(count_events(r, "retrieve") == 1);
}

TEST_CASE("high entropy runs the iterative loop and stops early once resolved") {
  const World w;
  const auto r = w.pipeline().answer_question(question("hard"));
  CHECK(r.decision.mode == RetrievalMode::multi_step);
  CHECK(std::abs(r.decision.entropy - std::log(10.0)) < 1e-9);
  CHECK(r.answer == "Master Quill");
  CHECK(r.retrieval_steps == 1);
}

TEST_CASE("unresolved question stops at the step cap") {
  const World w;
  for (std::size_t cap : {1u, 2u, 3u, 5u}) {
    auto cfg = World::config();
    cfg.max_steps = cap;
    const auto r = w.pipeline(cfg).answer_question(question("lost"));
    CHECK(r.decision.mode == RetrievalMode::multi_step);
    CHECK(r.retrieval_steps == cap);
    CHECK(r.retrieved_doc_ids.size() == cap);
    CHECK(count_events(r, "draft") == cap);
  }
}

TEST_CASE("accumulated context is deduplicated across hops") {
  const World w;
  const auto r = w.pipeline().answer_question(question("lost"));
  std::set<std::string> unique;
  std::size_t step = 0;
  for (const auto& e : r.trace) {
    if (e.at("type") != "draft") continue;
    for (const auto& id : r.retrieved_doc_ids.at(step)) unique.insert(id);
    ++step;
    CHECK(e.at("context_size").get<std::size_t>() == unique.size());
    CHECK(unique.size() <= step * World::config().top_k);
  }
}

TEST_CASE("forced modes bypass the router") {
  const World w;
  auto cfg = World::config();
  cfg.forced_mode = RetrievalMode::single_step;
  const auto r = w.pipeline(cfg).answer_question(question("easy"));
  CHECK(r.decision.mode == RetrievalMode::single_step);
  CHECK(r.retrieval_steps == 1);
  const auto m = w.pipeline().multi_step_answer(question("split"));
  CHECK(m.decision.mode == RetrievalMode::multi_step);
  CHECK(m.answer == "Elm");
}

TEST_CASE("mode and step count agree across random configurations") {
  const World w;
  Rng rng(4);
  for (int trial = 0; trial < 80; ++trial) {
    auto cfg = World::config();
    cfg.thresholds.tau_low = rng.between(0, 25) / 10.0;
    cfg.thresholds.tau_high = cfg.thresholds.tau_low + rng.between(0, 10) / 10.0;
    cfg.max_steps = rng.between(1, 4);
    cfg.top_k = rng.between(1, 5);
    cfg.num_samples = rng.between(1, 12);
    cfg.seed = rng.engine()();
    cfg.signal = rng.coin() ? EntropySignal::semantic : EntropySignal::predictive;
    const auto p = w.pipeline(cfg);
    for (const auto& q : World::questions()) {
      const auto r = p.answer_question(q);
      CHECK(r.decision.mode == decide(r.decision.entropy, cfg.thresholds).mode);
      CHECK(r.retrieved_doc_ids.size() == r.retrieval_steps);
      switch (r.decision.mode) {
        case RetrievalMode::no_retrieval: CHECK(r.retrieval_steps == 0); break;
        case RetrievalMode::single_step: CHECK(r.retrieval_steps == 1); break;
        case RetrievalMode::multi_step:
          CHECK(r.retrieval_steps >= 1);
          CHECK(r.retrieval_steps <= cfg.max_steps);
          break;
      }
      for (const auto& ids : r.retrieved_doc_ids) CHECK(ids.size() <= cfg.top_k);
      CHECK(r.entropy_report.semantic_entropy <= r.entropy_report.predictive_entropy + 1e-9);
    }
  }
}

TEST_CASE("runs are deterministic and replay from their own trace") {
  const World w;
  for (const auto& q : World::questions()) {
    const auto a = w.pipeline().answer_question(q);
    const auto b = w.pipeline().answer_question(q);
    CHECK(to_json(a) == to_json(b));
    const auto replayed = replay(a, q, World::config());
    CHECK(same_outcome(a, replayed));
    const auto restored = pipeline_result_from_json(nlohmann::json::parse(to_json(a).dump()));
    CHECK(same_outcome(a, replay(restored, q, World::config())));
  }
}

TEST_CASE("replay detects a diverging configuration") {
  const World w;
  const auto r = w.pipeline().answer_question(question("split"));
  auto other = World::config();
  other.num_samples = 4;
  CHECK_THROWS_AS(replay(r, question("split"), other), Error);
  CHECK_THROWS_AS(replay(r, question("easy"), World::config()), Error);
}

TEST_CASE("backend failures carry the partial trace") {
  const World w;
  const Pipeline no_index(w.generator, w.entailment, nullptr, World::config());
  CHECK(no_index.answer_question(question("easy")).answer == "Paris");
  try {
    no_index.answer_question(question("split"));
    FAIL("expected a pipeline error");
  } catch (const PipelineError& e) {
    CHECK(e.code() == Errc::index_not_built);
    CHECK(e.question_id() == "split");
    std::set<std::string> types;
    for (const auto& ev : e.partial_trace()) types.insert(ev.at("type").get<std::string>());
    CHECK(types.count("generate") == 1);
    CHECK(types.count("assess") == 1);
    CHECK(types.count("route") == 1);
  }
  CHECK_THROWS_AS(w.pipeline().answer_question({"nobody", "Unknown?", {"x"}}), PipelineError);
  CHECK_THROWS_AS(w.pipeline().answer_question({"easy", "  ", {"x"}}), Error);
}

TEST_CASE("wall time covers backend latency") {
  const World w;
  auto cfg = World::config();
  cfg.record_timing = true;
  for (const auto& q : World::questions()) {
    const auto r = w.pipeline(cfg).answer_question(q);
    double latency = 0.0;
    for (const auto& e : r.trace) {
      if (e.contains("latency_ms")) latency += e.at("latency_ms").get<double>();
    }
    CHECK(static_cast<double>(r.wall_time_ms) >= latency);
  }
}

TEST_CASE("invalid pipeline configuration") {
  const World w;
  auto cfg = World::config();
  cfg.thresholds = {0.9, 0.4};
  CHECK_THROWS_AS(w.pipeline(cfg), Error);
  cfg = World::config();
  cfg.num_samples = 0;
  CHECK_THROWS_AS(w.pipeline(cfg), Error);
  cfg = World::config();
  cfg.max_steps = 0;
  CHECK_THROWS_AS(w.pipeline(cfg), Error);
}
