#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "sugar/entailment.hpp"
#include "sugar/generator.hpp"
#include "sugar/orchestrator.hpp"
#include "sugar/retriever.hpp"

namespace sugar::testing {

/// Small scripted world: one question per routing regime plus a corpus that
/// resolves the uncertain ones.
///
///   easy    one-answer pool                -> no retrieval
///   split   two-way pool, doc names "Elm"  -> single step
///   hard    ten-way pool, "Quill" resolves -> multi step, stops after one hop
///   lost    ten-way pool, nothing resolves -> multi step, runs to the cap
struct World {
  MockGenerator generator{MockScenario::parse(scenario())};
  MockEntailment entailment;
  Bm25Index index = corpus();

  static std::string scenario() {
    std::string ten_guess, ten_wander;
    for (int j = 0; j < 10; ++j) {
      const auto sep = j == 0 ? "" : ", ";
      ten_guess += sep + std::string("[\"Guess option ") + std::to_string(j) + "\", 0.1]";
      ten_wander += sep + std::string("[\"Wander option ") + std::to_string(j) + "\", 0.1]";
    }
    return R"({"easy": [["Paris", 1.0]],
               "split": {"pool": [["Oak", 0.5], ["Ash", 0.5]],
                         "with_context": [{"when_context_contains": "Elm", "pool": [["Elm", 1.0]]}]},
               "hard": {"pool": [)" +
           ten_guess + R"(],
                        "with_context": [{"when_context_contains": "Quill", "pool": [["Master Quill", 1.0]]}]},
               "lost": [)" +
           ten_wander + "]}";
  }

  static Bm25Index corpus() {
    Bm25Index index;
    index.build({{"tree", "Trees", "The tall tree in the square is an Elm."},
                 {"guild", "Guild", "The scribes guild was led by Master Quill."},
                 {"noise1", "", "Rivers flow to the sea."},
                 {"noise2", "", "Mountains rise above the plain."},
                 {"noise3", "", "The wanderer asked about the road north."}});
    return index;
  }

  static std::vector<Question> questions() {
    return {{"easy", "What is the capital of France?", {"Paris"}},
            {"split", "Which tree stands in the square?", {"Elm"}},
            {"hard", "Who led the scribes guild?", {"Master Quill"}},
            {"lost", "Where did the wanderer go?", {"north"}}};
  }

  static PipelineConfig config() {
    PipelineConfig c;
    c.thresholds = {0.4, 0.9};
    c.top_k = 2;
    c.max_steps = 3;
    c.seed = 11;
    c.record_timing = false;
    return c;
  }

  Pipeline pipeline(PipelineConfig c = config()) const { return Pipeline(generator, entailment, &index, c); }
};

}  // namespace sugar::testing
