#include <atomic>

#include "doctest.h"
#include "json.hpp"
#include "local_server.hpp"
#include "sugar/entailment.hpp"
#include "sugar/error.hpp"
#include "support.hpp"

using namespace sugar;
using namespace sugar::testing;
using nlohmann::json;

namespace {

const std::string kQ = "Who wrote Romeo and Juliet?";

EntailmentLabel label(const EntailmentBackend& b, const std::string& p, const std::string& h) {
  return b.entails(kQ, p, h).label;
}

}  // namespace

TEST_CASE("mock entailment examples") {
  const MockEntailment aliased(PhraseTable{{"Shakespeare", "William Shakespeare"}});
  CHECK(label(aliased, "Shakespeare wrote Romeo and Juliet", "Romeo and Juliet was written by William Shakespeare") ==
        EntailmentLabel::entails);
  CHECK(bidirectionally_equivalent(aliased, kQ, "Shakespeare wrote Romeo and Juliet",
                                   "Romeo and Juliet was written by William Shakespeare"));

  const MockEntailment plain;
  CHECK(label(plain, "Paris", "Paris") == EntailmentLabel::entails);
  CHECK(label(plain, "Paris", "Berlin") == EntailmentLabel::neutral);
  CHECK(bidirectionally_equivalent(plain, kQ, "Paris", "Paris"));
  CHECK_FALSE(bidirectionally_equivalent(plain, kQ, "Paris", "Berlin"));
  CHECK(label(plain, "The Paris!", "paris") == EntailmentLabel::entails);
}

TEST_CASE("mock entailment is directional over alias mentions") {
  const MockEntailment m(PhraseTable{{"Shakespeare", "William Shakespeare"}, {"Marlowe", "Kit Marlowe"}});
  CHECK(label(m, "Shakespeare and Marlowe", "Shakespeare") == EntailmentLabel::entails);
  CHECK(label(m, "Shakespeare", "Shakespeare and Marlowe") == EntailmentLabel::neutral);
  CHECK_FALSE(bidirectionally_equivalent(m, kQ, "Shakespeare", "Shakespeare and Marlowe"));
}

TEST_CASE("antonym table yields contradicts") {
  const MockEntailment m({}, {{"yes", "no"}, {"hot", "cold"}});
  CHECK(label(m, "yes", "no") == EntailmentLabel::contradicts);
  CHECK(label(m, "it is hot", "it is cold") == EntailmentLabel::contradicts);
  CHECK(label(m, "yes", "yes indeed") == EntailmentLabel::neutral);
}

TEST_CASE("entailment inputs must be non-empty after trimming") {
  const MockEntailment m;
  CHECK_THROWS_AS(m.entails(" ", "a", "b"), Error);
  CHECK_THROWS_AS(m.entails("q", "", "b"), Error);
  CHECK_THROWS_AS(m.entails("q", "a", "\t"), Error);
}

TEST_CASE("bidirectional equivalence is symmetric and reflexive under the mock") {
  Rng rng(21);
  PhraseTable aliases;
  for (int c = 0; c < 4; ++c) aliases.push_back({rng.word(), rng.word() + " " + rng.word()});
  const MockEntailment m(aliases, {{"hot", "cold"}});
  for (int trial = 0; trial < 500; ++trial) {
    auto phrase = [&] {
      std::string s = rng.word();
      for (std::size_t i = rng.between(0, 2); i > 0; --i) s += " " + rng.word();
      if (rng.coin(0.3)) s += " " + aliases[rng.index(aliases.size())][rng.index(2)];
      return s;
    };
    const auto a = phrase(), b = phrase();
    CHECK(bidirectionally_equivalent(m, kQ, a, b) == bidirectionally_equivalent(m, kQ, b, a));
    CHECK(bidirectionally_equivalent(m, kQ, a, a));
    CHECK(m.entails(kQ, a, b).label == m.entails(kQ, a, b).label);
  }
}

TEST_CASE("phrase tables parse from JSON lists") {
  const auto t = parse_phrase_table(R"([["a", "b"], ["c"]])");
  REQUIRE(t.size() == 2);
  CHECK(t[0] == std::vector<std::string>{"a", "b"});
  CHECK_THROWS_AS(parse_phrase_table(R"({"a": 1})"), Error);
  CHECK_THROWS_AS(parse_phrase_table(R"([["a", 1]])"), Error);
  CHECK_THROWS_AS(parse_phrase_table("[["), Error);
}

TEST_CASE("NLI responses") {
  auto v = parse_nli_response(R"({"label": "entails", "probabilities": {"entails": 0.7, "neutral": 0.2, "contradicts": 0.1}})");
  CHECK(v.label == EntailmentLabel::entails);
  CHECK(v.score == doctest::Approx(0.7));

  v = parse_nli_response(R"({"probabilities": {"entails": 0.1, "neutral": 0.2, "contradicts": 0.7}})");
  CHECK(v.label == EntailmentLabel::contradicts);

  v = parse_nli_response(R"({"label": "neutral", "probabilities": {"entails": 0.5, "neutral": 0.5, "contradicts": 0.0}})");
  CHECK(v.label == EntailmentLabel::neutral);

  auto malformed = [](const std::string& body) {
    try {
      parse_nli_response(body);
    } catch (const Error& e) {
      return e.code() == Errc::malformed_backend_response;
    }
    return false;
  };
  CHECK(malformed("not json"));
  CHECK(malformed(R"({"label": "entails"})"));
  CHECK(malformed(R"({"probabilities": {"entails": 0.5, "neutral": 0.5}})"));
  CHECK(malformed(R"({"probabilities": {"entails": 1.5, "neutral": 0.0, "contradicts": 0.0}})"));
  CHECK(malformed(R"({"label": "maybe", "probabilities": {"entails": 0.5, "neutral": 0.3, "contradicts": 0.2}})"));
  CHECK(malformed(R"({"label": "neutral", "probabilities": {"entails": 0.6, "neutral": 0.3, "contradicts": 0.1}})"));
}

TEST_CASE("HTTP entailment frames premise and hypothesis with the question") {
  LocalServer s;
  json seen;
  std::string auth;
  s.server().Post("/nli", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    auth = req.get_header_value("Authorization");
    res.set_content(R"({"label": "entails", "probabilities": {"entails": 0.9, "neutral": 0.05, "contradicts": 0.05}})",
                    "application/json");
  });
  s.start();
  const HttpEntailment nli(HttpEntailmentOptions{{s.url("/nli"), "secret", 2000, 0, 1}});
  const auto v = nli.entails("Who?", "Ann", "Anne");
  CHECK(v.label == EntailmentLabel::entails);
  CHECK(seen["premise"] == "Who? Ann");
  CHECK(seen["hypothesis"] == "Who? Anne");
  CHECK(auth == "Bearer secret");
}

TEST_CASE("HTTP entailment retries server errors then gives up") {
  LocalServer s;
  std::atomic<int> calls{0};
  s.server().Post("/nli", [&](const httplib::Request&, httplib::Response& res) {
    if (++calls < 3) {
      res.status = 503;
      return;
    }
    res.set_content(R"({"probabilities": {"entails": 0.1, "neutral": 0.8, "contradicts": 0.1}})", "application/json");
  });
  s.start();
  const HttpEntailment flaky(HttpEntailmentOptions{{s.url("/nli"), "", 2000, 2, 1}});
  CHECK(flaky.entails("q", "a", "b").label == EntailmentLabel::neutral);
  CHECK(calls == 3);

  calls = -100;
  const HttpEntailment impatient(HttpEntailmentOptions{{s.url("/nli"), "", 2000, 1, 1}});
  try {
    impatient.entails("q", "a", "b");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::backend_unreachable);
  }
}

TEST_CASE("unreachable NLI backend") {
  const HttpEntailment nli(HttpEntailmentOptions{{dead_url(), "", 500, 1, 1}});
  try {
    nli.entails("q", "a", "b");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::backend_unreachable);
    CHECK(std::string(e.what()).find("2 attempt") != std::string::npos);
  }
}

TEST_CASE("cached entailment memoizes per triple") {
  struct Counting final : EntailmentBackend {
    mutable std::atomic<int> calls{0};
    EntailmentVerdict entails(const std::string&, const std::string& a, const std::string& b) const override {
      ++calls;
      return {a == b ? EntailmentLabel::entails : EntailmentLabel::neutral, 1.0};
    }
  } inner;
  const CachedEntailment cache(inner);
  for (int i = 0; i < 3; ++i) {
    CHECK(cache.entails("q", "a", "a").label == EntailmentLabel::entails);
    CHECK(cache.entails("q", "a", "b").label == EntailmentLabel::neutral);
  }
  CHECK(inner.calls == 2);
  CHECK(cache.size() == 2);
}
