#include "sugar/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "sugar/error.hpp"
#include "sugar/text.hpp"

namespace sugar {

bool Clustering::has_probs() const noexcept {
  return !clusters.empty() &&
         std::all_of(clusters.begin(), clusters.end(), [](const SemanticCluster& c) { return c.log_prob.has_value(); });
}

std::vector<double> normalize_sample_probs(std::span<const AnswerSample> samples, bool length_normalized) {
  if (samples.empty()) throw Error(Errc::empty_sample_set, "cannot normalize an empty sample set");

  std::vector<double> scores;
  scores.reserve(samples.size());
  for (const auto& s : samples) {
    if (length_normalized && s.token_count() == 0) {
      throw Error(Errc::precondition_violation, "length normalization needs token_count >= 1");
    }
    scores.push_back(length_normalized ? s.total_logprob / static_cast<double>(s.token_count()) : s.total_logprob);
  }
  const double shift = *std::max_element(scores.begin(), scores.end());
  double z = 0.0;
  for (auto& s : scores) z += (s = std::exp(s - shift));
  for (auto& s : scores) s = std::max(s / z, std::numeric_limits<double>::min());
  return scores;
}

Clustering cluster_samples(const std::string& question_text, std::span<const AnswerSample> samples,
                           const EquivalenceFn& equivalent) {
  if (samples.empty()) throw Error(Errc::empty_sample_set, "cannot cluster an empty sample set");

  Clustering result;
  result.num_samples = samples.size();
  // Clusters that may accept new members; degenerate samples are excluded.
  std::vector<std::size_t> open;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (normalize_answer(samples[i].text).empty()) {
      result.clusters.push_back({{i}, std::nullopt});
      continue;
    }
    bool joined = false;
    for (std::size_t c : open) {
      auto& cluster = result.clusters[c];
      if (equivalent(question_text, samples[cluster.representative_index()].text, samples[i].text)) {
        cluster.member_indices.push_back(i);
        joined = true;
        break;
      }
    }
    if (!joined) {
      open.push_back(result.clusters.size());
      result.clusters.push_back({{i}, std::nullopt});
    }
  }
  return result;
}

Clustering attach_cluster_probs(Clustering clustering, std::span<const double> normalized_probs) {
  if (normalized_probs.size() != clustering.num_samples) {
    throw Error(Errc::length_mismatch, "expected " + std::to_string(clustering.num_samples) +
                                           " probabilities, got " + std::to_string(normalized_probs.size()));
  }
  std::vector<double> masses;
  masses.reserve(clustering.clusters.size());
  double total = 0.0;
  for (const auto& cluster : clustering.clusters) {
    double mass = 0.0;
    for (std::size_t i : cluster.member_indices) {
      if (i >= normalized_probs.size()) throw Error(Errc::length_mismatch, "cluster member index out of range");
      mass += normalized_probs[i];
    }
    masses.push_back(mass);
    total += mass;
  }
  // Dividing by the summed mass keeps a lone cluster at exactly log 1 = 0.
  for (std::size_t c = 0; c < masses.size(); ++c) clustering.clusters[c].log_prob = std::log(masses[c] / total);
  return clustering;
}

double semantic_entropy(const Clustering& clustering) {
  if (!clustering.has_probs()) throw Error(Errc::missing_cluster_probs, "cluster probabilities are not attached");
  double sum = 0.0;
  for (const auto& c : clustering.clusters) sum += *c.log_prob;
  // Rounding can leave a single-cluster log-prob a hair above zero.
  return std::max(0.0, -sum / static_cast<double>(clustering.clusters.size()));
}

double predictive_entropy(std::span<const double> normalized_probs) {
  if (normalized_probs.empty()) throw Error(Errc::empty_sample_set, "predictive entropy of an empty sample set");
  double sum = 0.0;
  for (double p : normalized_probs) sum += std::log(p);
  return std::max(0.0, -sum / static_cast<double>(normalized_probs.size()));
}

EntropyReport assess_entropy(const std::string& question_text, std::span<const AnswerSample> samples,
                             const EquivalenceFn& equivalent, bool length_normalized) {
  EntropyReport report;
  report.length_normalized = length_normalized;
  report.normalized_sample_probs = normalize_sample_probs(samples, length_normalized);
  report.clustering =
      attach_cluster_probs(cluster_samples(question_text, samples, equivalent), report.normalized_sample_probs);
  report.semantic_entropy = semantic_entropy(report.clustering);
  report.predictive_entropy = predictive_entropy(report.normalized_sample_probs);
  return report;
}

}  // namespace sugar
