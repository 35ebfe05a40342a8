#include "sugar/router.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <string>

#include "sugar/error.hpp"
#include "sugar/random.hpp"

namespace sugar {

std::string_view to_string(RetrievalMode mode) noexcept {
  switch (mode) {
    case RetrievalMode::no_retrieval: return "no_retrieval";
    case RetrievalMode::single_step: return "single_step";
    case RetrievalMode::multi_step: return "multi_step";
  }
  return "no_retrieval";
}

RetrievalMode retrieval_mode_from_string(std::string_view s) {
  if (s == "no_retrieval" || s == "none") return RetrievalMode::no_retrieval;
  if (s == "single_step" || s == "single") return RetrievalMode::single_step;
  if (s == "multi_step" || s == "multi") return RetrievalMode::multi_step;
  throw Error(Errc::config_error, "unknown retrieval mode \"" + std::string(s) + "\"");
}

void validate(const Thresholds& t) {
  if (!std::isfinite(t.tau_low) || !std::isfinite(t.tau_high) || t.tau_low < 0.0) {
    throw Error(Errc::invalid_thresholds, "thresholds must be finite and non-negative");
  }
  if (t.tau_low > t.tau_high) throw Error(Errc::invalid_thresholds, "tau_low > tau_high");
}

RetrievalDecision decide(double entropy, const Thresholds& t) {
  validate(t);
  if (!(entropy >= 0.0)) throw Error(Errc::precondition_violation, "entropy must be >= 0");
  RetrievalMode mode;
  if (entropy < t.tau_low) {
    mode = RetrievalMode::no_retrieval;
  } else if (t.binary() || entropy < t.tau_high) {
    mode = RetrievalMode::single_step;
  } else {
    mode = RetrievalMode::multi_step;
  }
  return {mode, entropy, t};
}

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

namespace {

constexpr double kScoreTie = 1e-12;

double outcome(const CalibrationRecord& r, RetrievalMode mode, CalibrationObjective objective) {
  if (objective == CalibrationObjective::accuracy) {
    switch (mode) {
      case RetrievalMode::no_retrieval: return r.correct_none ? 1.0 : 0.0;
      case RetrievalMode::single_step: return r.correct_single ? 1.0 : 0.0;
      case RetrievalMode::multi_step: return r.correct_multi ? 1.0 : 0.0;
    }
  }
  const auto& f = mode == RetrievalMode::no_retrieval ? r.f1_none
                  : mode == RetrievalMode::single_step ? r.f1_single
                                                       : r.f1_multi;
  return *f;
}

double steps(const CalibrationRecord& r, RetrievalMode mode) {
  switch (mode) {
    case RetrievalMode::no_retrieval: return 0.0;
    case RetrievalMode::single_step: return 1.0;
    case RetrievalMode::multi_step: return static_cast<double>(r.multi_steps.value_or(2));
  }
  return 0.0;
}

void check_inputs(std::span<const CalibrationRecord> records, std::span<const Thresholds> grid,
                  const CalibrationOptions& options) {
  if (records.empty()) throw Error(Errc::empty_records, "calibration needs at least one record");
  if (grid.empty()) throw Error(Errc::invalid_grid, "calibration grid is empty");
  for (const auto& t : grid) {
    if (!t.valid() || !std::isfinite(t.tau_high)) {
      throw Error(Errc::invalid_grid, "grid pair (" + std::to_string(t.tau_low) + ", " + std::to_string(t.tau_high) +
                                          ") is invalid: tau_low > tau_high or negative");
    }
  }
  if (options.k_folds < 2 || options.k_folds > records.size()) {
    throw Error(Errc::precondition_violation, "k_folds must lie in [2, " + std::to_string(records.size()) + "], got " +
                                                  std::to_string(options.k_folds));
  }
  for (const auto& r : records) {
    if (!(r.entropy >= 0.0)) throw Error(Errc::malformed_record, "calibration record entropy must be >= 0");
    if (options.objective == CalibrationObjective::f1 &&
        (!r.f1_none.has_value() || !r.f1_single.has_value() || !r.f1_multi.has_value())) {
      throw Error(Errc::malformed_record, "F1 objective needs f1_none, f1_single and f1_multi on every record");
    }
  }
}

}  // namespace

std::vector<Thresholds> default_grid() {
  std::vector<double> taus;
  for (int i = 0; i <= 20; ++i) taus.push_back(i / 10.0);
  std::vector<Thresholds> grid;
  for (std::size_t lo = 0; lo < taus.size(); ++lo) {
    for (std::size_t hi = lo; hi < taus.size(); ++hi) grid.push_back({taus[lo], taus[hi]});
  }
  return grid;
}

std::vector<std::size_t> assign_folds(std::size_t num_records, std::size_t k_folds, std::uint64_t seed) {
  std::vector<std::size_t> order(num_records);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(seed, 0xf01d));
  seeded_shuffle(order, rng);
  std::vector<std::size_t> fold(num_records);
  for (std::size_t i = 0; i < num_records; ++i) fold[order[i]] = i % k_folds;
  return fold;
}

std::vector<GridScore> score_grid(std::span<const CalibrationRecord> records, std::span<const Thresholds> grid,
                                  const CalibrationOptions& options) {
  check_inputs(records, grid, options);
  const auto fold = assign_folds(records.size(), options.k_folds, options.seed);

  std::vector<GridScore> scores;
  scores.reserve(grid.size());
  for (const auto& t : grid) {
    std::vector<double> fold_sum(options.k_folds, 0.0);
    std::vector<std::size_t> fold_size(options.k_folds, 0);
    double total_steps = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const auto mode = decide(records[i].entropy, t).mode;
      fold_sum[fold[i]] += outcome(records[i], mode, options.objective);
      ++fold_size[fold[i]];
      total_steps += steps(records[i], mode);
    }
    double cv = 0.0;
    for (std::size_t f = 0; f < options.k_folds; ++f) cv += fold_sum[f] / static_cast<double>(fold_size[f]);
    scores.push_back({t, cv / static_cast<double>(options.k_folds), total_steps / static_cast<double>(records.size())});
  }
  return scores;
}

GridScore calibrate(std::span<const CalibrationRecord> records, std::span<const Thresholds> grid,
                    const CalibrationOptions& options) {
  const auto scores = score_grid(records, grid, options);
  return *std::min_element(scores.begin(), scores.end(), [](const GridScore& a, const GridScore& b) {
    if (std::abs(a.cv_score - b.cv_score) > kScoreTie) return a.cv_score > b.cv_score;
    if (std::abs(a.expected_steps - b.expected_steps) > kScoreTie) return a.expected_steps < b.expected_steps;
    if (a.thresholds.tau_low != b.thresholds.tau_low) return a.thresholds.tau_low < b.thresholds.tau_low;
    return a.thresholds.tau_high < b.thresholds.tau_high;
  });
}

std::vector<ProfileBucket> entropy_accuracy_profile(std::span<const CalibrationRecord> records,
                                                    const Thresholds& thresholds, double bucket_width) {
  if (records.empty()) throw Error(Errc::empty_records, "profile needs at least one record");
  if (!(bucket_width > 0.0)) throw Error(Errc::precondition_violation, "bucket width must be > 0");
  validate(thresholds);

  struct Acc {
    std::size_t count = 0, correct = 0, routed_correct = 0, retrieved = 0;
  };
  std::map<long long, Acc> buckets;
  for (const auto& r : records) {
    if (!(r.entropy >= 0.0)) throw Error(Errc::malformed_record, "calibration record entropy must be >= 0");
    // Slack keeps values such as 0.6 / 0.1 = 5.999... in bucket 6.
    const auto index = static_cast<long long>(std::floor(r.entropy / bucket_width + 1e-9));
    auto& b = buckets[index];
    const auto mode = decide(r.entropy, thresholds).mode;
    ++b.count;
    b.correct += r.correct_none ? 1 : 0;
    b.routed_correct += outcome(r, mode, CalibrationObjective::accuracy) > 0.5 ? 1 : 0;
    b.retrieved += mode != RetrievalMode::no_retrieval ? 1 : 0;
  }
  std::vector<ProfileBucket> out;
  for (const auto& [index, b] : buckets) {
    const auto n = static_cast<double>(b.count);
    out.push_back({static_cast<double>(index) * bucket_width, static_cast<double>(index + 1) * bucket_width, b.count,
                   static_cast<double>(b.correct) / n, static_cast<double>(b.routed_correct) / n,
                   static_cast<double>(b.retrieved) / n});
  }
  return out;
}

}  // namespace sugar
