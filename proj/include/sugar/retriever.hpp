#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace sugar {

struct Document {
  std::string doc_id;
  std::string title;
  std::string text;
};

struct ScoredDocument {
  Document document;
  double score = 0.0;
};

struct IndexStats {
  std::size_t num_docs = 0;
  std::size_t num_terms = 0;
  double avg_doc_len = 0.0;
};

/// Top-k document search.
class Retriever {
 public:
  virtual ~Retriever() = default;
  /// Results by descending score, ties by ascending doc_id.
  virtual std::vector<ScoredDocument> search(std::string_view query, std::size_t k) const = 0;
};

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
};

/// In-memory BM25 inverted index.
///
/// score(d, q) = sum over distinct query terms t present in d of
///   idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * |d| / avgdl))
/// with idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)).
///
/// Documents are indexed over title and text. Searches are const and safe to
/// run concurrently once the index is built.
class Bm25Index final : public Retriever {
 public:
  static constexpr int kFormatVersion = 1;

  explicit Bm25Index(Bm25Params params = {}) : params_(params) {}

  /// Reads a JSONL corpus ({"doc_id", "title", "text"} per line), replacing
  /// any previous contents.
  IndexStats ingest_corpus(const std::filesystem::path& path);
  IndexStats ingest_jsonl(std::string_view jsonl);
  IndexStats build(std::vector<Document> documents);

  std::vector<ScoredDocument> search(std::string_view query, std::size_t k) const override;

  bool built() const noexcept { return built_; }
  IndexStats stats() const;
  const Bm25Params& params() const noexcept { return params_; }
  const std::vector<Document>& documents() const noexcept { return documents_; }
  double idf(std::string_view term) const;

  /// Persists to `<dir>/index.json`.
  void save(const std::filesystem::path& dir) const;
  static Bm25Index load(const std::filesystem::path& dir);

 private:
  struct Posting {
    std::uint32_t doc = 0;
    std::uint32_t tf = 0;
  };

  Bm25Params params_;
  bool built_ = false;
  std::vector<Document> documents_;
  std::vector<std::uint32_t> doc_lengths_;
  std::size_t total_tokens_ = 0;
  std::unordered_map<std::string, std::vector<Posting>> postings_;
};

}  // namespace sugar
