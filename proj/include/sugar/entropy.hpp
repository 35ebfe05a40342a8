#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sugar/generator.hpp"

namespace sugar {

struct SemanticCluster {
  /// Strictly increasing sample indices.
  std::vector<std::size_t> member_indices;
  /// Natural log of p(C | x); absent until probabilities are attached.
  std::optional<double> log_prob;

  std::size_t representative_index() const { return member_indices.front(); }
};

/// A partition of {0, ..., num_samples - 1}.
struct Clustering {
  std::vector<SemanticCluster> clusters;
  std::size_t num_samples = 0;

  bool has_probs() const noexcept;
};

struct EntropyReport {
  double semantic_entropy = 0.0;   // nats
  double predictive_entropy = 0.0; // nats
  Clustering clustering;
  std::vector<double> normalized_sample_probs;
  bool length_normalized = false;
};

/// (question_text, a, b) -> a and b mean the same thing.
using EquivalenceFn = std::function<bool(const std::string&, const std::string&, const std::string&)>;

/// Softmax over sequence scores (total log-prob, or total / token count when
/// `length_normalized`). Uses the max-shift form; results are floored at the
/// smallest normal double so that downstream logs stay finite.
std::vector<double> normalize_sample_probs(std::span<const AnswerSample> samples, bool length_normalized);

/// Greedy, order-deterministic clustering: each sample joins the first
/// existing cluster (in creation order) whose representative is equivalent,
/// otherwise opens a new cluster. Samples whose text normalizes to the empty
/// string always get their own cluster and are never compared.
Clustering cluster_samples(const std::string& question_text, std::span<const AnswerSample> samples,
                           const EquivalenceFn& equivalent);

/// Sets each cluster's log_prob to ln(sum of its members' probabilities).
Clustering attach_cluster_probs(Clustering clustering, std::span<const double> normalized_probs);

/// -(1/|C|) * sum_i log p(C_i | x).
double semantic_entropy(const Clustering& clustering);

/// -(1/N) * sum_i ln p_i over the normalized sample probabilities.
double predictive_entropy(std::span<const double> normalized_probs);

/// Full assessment: normalize, cluster, attach, and score both entropies.
EntropyReport assess_entropy(const std::string& question_text, std::span<const AnswerSample> samples,
                             const EquivalenceFn& equivalent, bool length_normalized);

}  // namespace sugar
