#pragma once

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "sugar/entropy.hpp"
#include "sugar/generator.hpp"
#include "sugar/retriever.hpp"
#include "sugar/text.hpp"

namespace sugar::testing {

inline std::filesystem::path source_dir() { return SUGAR_SOURCE_DIR; }

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo = 0.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  std::size_t index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(engine_); }
  std::size_t between(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(engine_);
  }
  bool coin(double p = 0.5) { return uniform() < p; }

  /// Random probability vector of length n with every entry > 0.
  std::vector<double> simplex(std::size_t n) {
    std::vector<double> w(n);
    for (auto& x : w) x = uniform(0.01, 1.0);
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& x : w) x /= total;
    return w;
  }

  /// Random partition of {0..n-1}, as a label per element.
  std::vector<std::size_t> partition_labels(std::size_t n) {
    std::vector<std::size_t> labels(n);
    for (auto& l : labels) l = index(n);
    return labels;
  }

  std::string word(std::size_t max_len = 6) {
    static const std::string alphabet = "abcdefghij";
    std::string w;
    const auto len = between(1, max_len);
    for (std::size_t i = 0; i < len; ++i) w += alphabet[index(alphabet.size())];
    return w;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// One-token sample whose total log-prob is ln(p).
inline AnswerSample sample(std::string text, double p) { return AnswerSample::from_tokens(std::move(text), {std::log(p)}); }

inline Clustering clustering_of(const std::vector<std::vector<std::size_t>>& groups, std::size_t n) {
  Clustering c;
  c.num_samples = n;
  for (const auto& g : groups) c.clusters.push_back({g, std::nullopt});
  return c;
}

/// SE straight from cluster probabilities: -(1/|C|) sum ln p.
inline double direct_semantic_entropy(const std::vector<double>& cluster_probs) {
  double s = 0.0;
  for (double p : cluster_probs) s += std::log(p);
  return -s / static_cast<double>(cluster_probs.size());
}

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

  /// Components as sorted member lists, ordered by smallest member.
  std::vector<std::vector<std::size_t>> components() {
    std::map<std::size_t, std::vector<std::size_t>> by_root;
    for (std::size_t i = 0; i < parent_.size(); ++i) by_root[find(i)].push_back(i);
    std::vector<std::vector<std::size_t>> out;
    for (auto& [_, members] : by_root) out.push_back(std::move(members));
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::vector<std::size_t> parent_;
};

/// Reference BM25: rescans every document for every query term.
inline std::map<std::string, double> reference_bm25(const std::vector<Document>& docs, const std::string& query,
                                                    double k1 = 1.2, double b = 0.75) {
  std::vector<std::vector<std::string>> toks;
  double total = 0.0;
  for (const auto& d : docs) {
    auto t = tokenize(d.title);
    const auto body = tokenize(d.text);
    t.insert(t.end(), body.begin(), body.end());
    total += static_cast<double>(t.size());
    toks.push_back(std::move(t));
  }
  const double n = static_cast<double>(docs.size());
  const double avgdl = total / n;
  const auto q = tokenize(query);
  const std::set<std::string> terms(q.begin(), q.end());
  std::map<std::string, double> scores;
  for (const auto& term : terms) {
    double df = 0.0;
    for (const auto& t : toks) df += std::count(t.begin(), t.end(), term) > 0 ? 1.0 : 0.0;
    if (df == 0.0) continue;
    const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    for (std::size_t i = 0; i < docs.size(); ++i) {
      const double tf = static_cast<double>(std::count(toks[i].begin(), toks[i].end(), term));
      if (tf == 0.0) continue;
      const double len = static_cast<double>(toks[i].size());
      scores[docs[i].doc_id] += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * len / avgdl));
    }
  }
  return scores;
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("sugar-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path write(const std::string& name, const std::string& contents) const {
    const auto p = path_ / name;
    std::ofstream(p, std::ios::binary) << contents;
    return p;
  }

 private:
  std::filesystem::path path_;
};

}  // namespace sugar::testing
