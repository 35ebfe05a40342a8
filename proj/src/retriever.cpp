#include "sugar/retriever.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_set>

#include "json.hpp"
#include "sugar/error.hpp"
#include "sugar/io.hpp"
#include "sugar/text.hpp"

namespace sugar {

using nlohmann::json;

namespace {

std::vector<std::string> document_tokens(const Document& d) {
  auto tokens = tokenize(d.title);
  auto body = tokenize(d.text);
  tokens.insert(tokens.end(), std::make_move_iterator(body.begin()), std::make_move_iterator(body.end()));
  return tokens;
}

Document parse_document(const json& j, std::size_t line) {
  if (!j.is_object()) throw Error(Errc::malformed_record, "line " + std::to_string(line) + ": expected an object", line);
  auto field = [&](const char* name, bool required) -> std::string {
    if (!j.contains(name)) {
      if (required) {
        throw Error(Errc::malformed_record, "line " + std::to_string(line) + ": missing \"" + name + "\"", line);
      }
      return {};
    }
    if (!j[name].is_string()) {
      throw Error(Errc::malformed_record, "line " + std::to_string(line) + ": \"" + name + "\" must be a string", line);
    }
    return j[name].get<std::string>();
  };
  Document d{field("doc_id", true), field("title", false), field("text", true)};
  if (d.doc_id.empty()) throw Error(Errc::malformed_record, "line " + std::to_string(line) + ": empty doc_id", line);
  if (trim(d.text).empty()) throw Error(Errc::malformed_record, "line " + std::to_string(line) + ": empty text", line);
  return d;
}

}  // namespace

IndexStats Bm25Index::ingest_corpus(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw Error(Errc::corpus_not_found, "corpus not found: " + path.string());
  }
  return ingest_jsonl(read_file(path, Errc::corpus_not_found));
}

IndexStats Bm25Index::ingest_jsonl(std::string_view jsonl) {
  std::vector<Document> docs;
  std::unordered_set<std::string> seen;
  for_each_jsonl(jsonl, [&](const json& j, std::size_t line) {
    auto d = parse_document(j, line);
    if (!seen.insert(d.doc_id).second) {
      throw Error(Errc::duplicate_doc_id, "line " + std::to_string(line) + ": duplicate doc_id \"" + d.doc_id + "\"",
                  line);
    }
    docs.push_back(std::move(d));
  });
  return build(std::move(docs));
}

IndexStats Bm25Index::build(std::vector<Document> documents) {
  if (documents.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(Errc::precondition_violation, "corpus too large for 32-bit posting ids");
  }
  std::unordered_set<std::string> seen;
  for (const auto& d : documents) {
    if (!seen.insert(d.doc_id).second) throw Error(Errc::duplicate_doc_id, "duplicate doc_id \"" + d.doc_id + "\"");
  }

  documents_ = std::move(documents);
  doc_lengths_.clear();
  postings_.clear();
  total_tokens_ = 0;
  for (std::uint32_t i = 0; i < documents_.size(); ++i) {
    const auto tokens = document_tokens(documents_[i]);
    doc_lengths_.push_back(static_cast<std::uint32_t>(tokens.size()));
    total_tokens_ += tokens.size();
    std::unordered_map<std::string, std::uint32_t> tf;
    for (const auto& t : tokens) ++tf[t];
    for (auto& [term, count] : tf) postings_[term].push_back({i, count});
  }
  // unordered_map iteration order is unspecified; keep postings doc-sorted.
  for (auto& [term, list] : postings_) {
    std::sort(list.begin(), list.end(), [](const Posting& a, const Posting& b) { return a.doc < b.doc; });
  }
  built_ = true;
  return stats();
}

IndexStats Bm25Index::stats() const {
  IndexStats s;
  s.num_docs = documents_.size();
  s.num_terms = postings_.size();
  s.avg_doc_len = documents_.empty() ? 0.0 : static_cast<double>(total_tokens_) / static_cast<double>(documents_.size());
  return s;
}

double Bm25Index::idf(std::string_view term) const {
  const auto it = postings_.find(std::string(term));
  const double n = static_cast<double>(documents_.size());
  const double df = it == postings_.end() ? 0.0 : static_cast<double>(it->second.size());
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

std::vector<ScoredDocument> Bm25Index::search(std::string_view query, std::size_t k) const {
  if (!built_) throw Error(Errc::index_not_built, "search before the index was built");
  if (k == 0) throw Error(Errc::precondition_violation, "k must be >= 1");
  if (documents_.empty()) return {};

  const double avgdl = static_cast<double>(total_tokens_) / static_cast<double>(documents_.size());
  const auto terms = tokenize(query);
  const std::set<std::string> unique_terms(terms.begin(), terms.end());

  std::unordered_map<std::uint32_t, double> scores;
  for (const auto& term : unique_terms) {
    const auto it = postings_.find(term);
    if (it == postings_.end()) continue;
    const double term_idf = idf(term);
    for (const auto& p : it->second) {
      const double tf = p.tf;
      const double norm = params_.k1 * (1.0 - params_.b + params_.b * doc_lengths_[p.doc] / avgdl);
      scores[p.doc] += term_idf * tf * (params_.k1 + 1.0) / (tf + norm);
    }
  }

  std::vector<std::pair<std::uint32_t, double>> ranked(scores.begin(), scores.end());
  auto better = [this](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return documents_[a.first].doc_id < documents_[b.first].doc_id;
  };
  const auto top = std::min(k, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(top), ranked.end(), better);

  std::vector<ScoredDocument> out;
  out.reserve(top);
  for (std::size_t i = 0; i < top; ++i) out.push_back({documents_[ranked[i].first], ranked[i].second});
  return out;
}

void Bm25Index::save(const std::filesystem::path& dir) const {
  if (!built_) throw Error(Errc::index_not_built, "cannot save an index that was not built");
  json postings = json::object();
  for (const auto& [term, list] : postings_) {
    json entries = json::array();
    for (const auto& p : list) entries.push_back({p.doc, p.tf});
    postings[term] = std::move(entries);
  }
  json docs = json::array();
  for (const auto& d : documents_) docs.push_back(to_json(d));
  const json doc = {
      {"format", "sugar-bm25"},
      {"format_version", kFormatVersion},
      {"k1", params_.k1},
      {"b", params_.b},
      {"documents", std::move(docs)},
      {"doc_lengths", doc_lengths_},
      {"postings", std::move(postings)},
  };
  std::filesystem::create_directories(dir);
  write_file(dir / "index.json", doc.dump());
}

Bm25Index Bm25Index::load(const std::filesystem::path& dir) {
  const auto path = dir / "index.json";
  if (!std::filesystem::is_regular_file(path)) throw Error(Errc::index_not_built, "no index at " + path.string());
  json doc;
  try {
    doc = json::parse(read_file(path, Errc::index_not_built));
  } catch (const json::parse_error& e) {
    throw Error(Errc::malformed_record, "index file is not valid JSON: " + std::string(e.what()));
  }
  try {
    if (doc.at("format") != "sugar-bm25" || doc.at("format_version").get<int>() != kFormatVersion) {
      throw Error(Errc::malformed_record, "unsupported index format in " + path.string());
    }
    Bm25Index index({doc.at("k1").get<double>(), doc.at("b").get<double>()});
    for (const auto& d : doc.at("documents")) index.documents_.push_back(document_from_json(d));
    index.doc_lengths_ = doc.at("doc_lengths").get<std::vector<std::uint32_t>>();
    if (index.doc_lengths_.size() != index.documents_.size()) {
      throw Error(Errc::malformed_record, "index doc_lengths do not match documents");
    }
    for (auto len : index.doc_lengths_) index.total_tokens_ += len;
    for (const auto& [term, entries] : doc.at("postings").items()) {
      auto& list = index.postings_[term];
      for (const auto& e : entries) {
        const Posting p{e.at(0).get<std::uint32_t>(), e.at(1).get<std::uint32_t>()};
        if (p.doc >= index.documents_.size()) throw Error(Errc::malformed_record, "posting refers to unknown doc");
        list.push_back(p);
      }
    }
    index.built_ = true;
    return index;
  } catch (const json::exception& e) {
    throw Error(Errc::malformed_record, "index file " + path.string() + " is malformed: " + e.what());
  }
}

}  // namespace sugar
