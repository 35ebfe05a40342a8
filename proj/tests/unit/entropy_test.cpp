#include <cmath>
#include <numeric>

#include "doctest.h"
#include "sugar/entailment.hpp"
#include "sugar/entropy.hpp"
#include "sugar/error.hpp"
#include "support.hpp"

using namespace sugar;
using namespace sugar::testing;

namespace {

EquivalenceFn exact_text() {
  return [](const std::string&, const std::string& a, const std::string& b) { return a == b; };
}

std::vector<double> cluster_probs(const Clustering& c) {
  std::vector<double> out;
  for (const auto& cl : c.clusters) out.push_back(std::exp(*cl.log_prob));
  return out;
}

}  // namespace

TEST_CASE("normalize_sample_probs is a max-shifted softmax") {
  std::vector<AnswerSample> same{sample("a", 0.3), sample("b", 0.3)};
  auto p = normalize_sample_probs(same, false);
  CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-12));

  std::vector<AnswerSample> two{sample("a", 0.4), sample("b", 0.1)};
  p = normalize_sample_probs(two, false);
  CHECK(std::abs(p[0] - 0.8) < 1e-12);
  CHECK(std::abs(p[1] - 0.2) < 1e-12);

  std::vector<AnswerSample> one{sample("a", 0.01)};
  CHECK(normalize_sample_probs(one, false) == std::vector<double>{1.0});

  CHECK_THROWS_AS(normalize_sample_probs({}, false), Error);
}

TEST_CASE("normalize_sample_probs survives extreme log-probs") {
  std::vector<AnswerSample> s{AnswerSample::from_tokens("a", {-2000.0}), AnswerSample::from_tokens("b", {-2001.0})};
  const auto p = normalize_sample_probs(s, false);
  CHECK(std::abs(p[0] - 1.0 / (1.0 + std::exp(-1.0))) < 1e-12);
  CHECK(std::abs(p[0] + p[1] - 1.0) < 1e-12);
}

TEST_CASE("length normalization divides by token count") {
  std::vector<AnswerSample> s{AnswerSample::from_tokens("a b", {-1.0, -1.0}), AnswerSample::from_tokens("c", {-1.0})};
  const auto raw = normalize_sample_probs(s, false);
  const auto per_token = normalize_sample_probs(s, true);
  CHECK(raw[0] < raw[1]);
  CHECK(std::abs(per_token[0] - 0.5) < 1e-12);
}

TEST_CASE("cluster_samples examples") {
  std::vector<AnswerSample> tens(10, sample("Paris", 0.1));
  auto c = cluster_samples("q", tens, exact_text());
  REQUIRE(c.clusters.size() == 1);
  CHECK(c.clusters[0].member_indices.size() == 10);

  std::vector<AnswerSample> abab{sample("X", 0.25), sample("Y", 0.25), sample("X", 0.25), sample("Y", 0.25)};
  c = cluster_samples("q", abab, exact_text());
  REQUIRE(c.clusters.size() == 2);
  CHECK(c.clusters[0].member_indices == std::vector<std::size_t>{0, 2});
  CHECK(c.clusters[1].member_indices == std::vector<std::size_t>{1, 3});
  CHECK(c.clusters[1].representative_index() == 1);
}

TEST_CASE("samples that normalize to nothing stay alone and are never compared") {
  std::size_t calls = 0;
  const EquivalenceFn counting = [&](const std::string&, const std::string& a, const std::string& b) {
    ++calls;
    CHECK_FALSE(normalize_answer(a).empty());
    CHECK_FALSE(normalize_answer(b).empty());
    return true;
  };
  std::vector<AnswerSample> s{sample("the", 0.25), sample("x", 0.25), sample("a", 0.25), sample("y", 0.25)};
  const auto c = cluster_samples("q", s, counting);
  REQUIRE(c.clusters.size() == 3);
  CHECK(c.clusters[0].member_indices == std::vector<std::size_t>{0});
  CHECK(c.clusters[1].member_indices == std::vector<std::size_t>{1, 3});
  CHECK(c.clusters[2].member_indices == std::vector<std::size_t>{2});
  CHECK(calls == 1);
}

TEST_CASE("greedy clustering equals union-find components for transitive relations") {
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = rng.between(1, 6);
    const auto labels = rng.partition_labels(n);
    std::vector<AnswerSample> samples;
    for (std::size_t i = 0; i < n; ++i) samples.push_back(sample("s" + std::to_string(i), 1.0 / static_cast<double>(n)));
    const EquivalenceFn eq = [&](const std::string&, const std::string& a, const std::string& b) {
      return labels[std::stoul(a.substr(1))] == labels[std::stoul(b.substr(1))];
    };
    UnionFind uf(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (labels[i] == labels[j]) uf.unite(i, j);
      }
    }
    auto greedy = cluster_samples("q", samples, eq);
    std::vector<std::vector<std::size_t>> got;
    for (const auto& c : greedy.clusters) got.push_back(c.member_indices);
    std::sort(got.begin(), got.end());
    CHECK(got == uf.components());
  }
}

TEST_CASE("attach_cluster_probs sums member probabilities") {
  const std::vector<double> probs{0.4, 0.3, 0.2, 0.1};
  const auto c = attach_cluster_probs(clustering_of({{0, 1}, {2, 3}}, 4), probs);
  const auto p = cluster_probs(c);
  CHECK(std::abs(p[0] - 0.7) < 1e-12);
  CHECK(std::abs(p[1] - 0.3) < 1e-12);

  const std::vector<double> uniform(5, 0.2);
  const auto singles = attach_cluster_probs(clustering_of({{0}, {1}, {2}, {3}, {4}}, 5), uniform);
  for (const auto& cl : singles.clusters) CHECK(std::abs(*cl.log_prob + std::log(5.0)) < 1e-12);

  const auto one = attach_cluster_probs(clustering_of({{0, 1, 2, 3}}, 4), probs);
  CHECK(std::abs(*one.clusters[0].log_prob) < 1e-12);

  CHECK_THROWS_AS(attach_cluster_probs(clustering_of({{0, 1}}, 2), probs), Error);
}

TEST_CASE("semantic_entropy examples against the direct formula") {
  const std::vector<double> probs{0.5, 0.5};
  CHECK(semantic_entropy(attach_cluster_probs(clustering_of({{0, 1}}, 2), probs)) == 0.0);
  CHECK(std::abs(semantic_entropy(attach_cluster_probs(clustering_of({{0}, {1}}, 2), probs)) - std::log(2.0)) < 1e-12);

  const std::vector<double> skewed{0.7, 0.3};
  const double se = semantic_entropy(attach_cluster_probs(clustering_of({{0}, {1}}, 2), skewed));
  CHECK(std::abs(se - direct_semantic_entropy({0.7, 0.3})) < 1e-12);
  CHECK(std::abs(se - 0.7803238741) < 1e-9);

  CHECK_THROWS_AS(semantic_entropy(clustering_of({{0}}, 1)), Error);
}

TEST_CASE("predictive_entropy examples") {
  CHECK(predictive_entropy(std::vector<double>{1.0}) == 0.0);
  CHECK(std::abs(predictive_entropy(std::vector<double>{0.5, 0.5}) - std::log(2.0)) < 1e-12);
  CHECK(std::abs(predictive_entropy(std::vector<double>{0.8, 0.2}) - 0.916291) < 1e-6);
  CHECK_THROWS_AS(predictive_entropy(std::vector<double>{}), Error);
}

TEST_CASE("entropy properties over random partitions") {
  Rng rng(3);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = rng.between(1, 12);
    const auto probs = rng.simplex(n);
    const auto labels = rng.partition_labels(n);
    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < n; ++i) groups[labels[i]].push_back(i);
    std::vector<std::vector<std::size_t>> parts;
    for (auto& [_, g] : groups) parts.push_back(g);

    const auto c = attach_cluster_probs(clustering_of(parts, n), probs);
    const double se = semantic_entropy(c);
    const auto cp = cluster_probs(c);
    CHECK(std::abs(std::accumulate(cp.begin(), cp.end(), 0.0) - 1.0) < 1e-9);
    CHECK(se >= std::log(static_cast<double>(parts.size())) - 1e-9);
    CHECK((se == 0.0) == (parts.size() == 1));
    CHECK(std::abs(se - direct_semantic_entropy(cp)) < 1e-12);

    // Permutation invariance.
    auto reversed = parts;
    std::reverse(reversed.begin(), reversed.end());
    CHECK(std::abs(semantic_entropy(attach_cluster_probs(clustering_of(reversed, n), probs)) - se) < 1e-12);

    std::vector<std::vector<std::size_t>> singles;
    for (std::size_t i = 0; i < n; ++i) singles.push_back({i});
    CHECK(std::abs(semantic_entropy(attach_cluster_probs(clustering_of(singles, n), probs)) -
                   predictive_entropy(probs)) < 1e-12);
  }
}

TEST_CASE("merging a two-cluster clustering drops entropy to zero") {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = rng.between(2, 8);
    const auto probs = rng.simplex(n);
    const std::size_t cut = rng.between(1, n - 1);
    std::vector<std::size_t> left(cut), right(n - cut);
    std::iota(left.begin(), left.end(), 0);
    std::iota(right.begin(), right.end(), cut);
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    const double before = semantic_entropy(attach_cluster_probs(clustering_of({left, right}, n), probs));
    const double after = semantic_entropy(attach_cluster_probs(clustering_of({all}, n), probs));
    CHECK(after == 0.0);
    CHECK(after < before);
  }
}

TEST_CASE("assess_entropy with the mock entailment") {
  const MockEntailment mock(PhraseTable{{"Shakespeare", "William Shakespeare"}});
  const EquivalenceFn eq = [&](const std::string& q, const std::string& a, const std::string& b) {
    return bidirectionally_equivalent(mock, q, a, b);
  };
  std::vector<AnswerSample> s{sample("Shakespeare", 0.5), sample("William Shakespeare", 0.3), sample("Marlowe", 0.2)};
  const auto r = assess_entropy("Who wrote Hamlet?", s, eq, false);
  REQUIRE(r.clustering.clusters.size() == 2);
  CHECK(std::abs(r.semantic_entropy - direct_semantic_entropy({0.8, 0.2})) < 1e-12);
  CHECK(r.semantic_entropy < r.predictive_entropy);
  CHECK_FALSE(r.length_normalized);
}
