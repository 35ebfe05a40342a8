#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace sugar {

enum class RetrievalMode { no_retrieval = 0, single_step = 1, multi_step = 2 };

std::string_view to_string(RetrievalMode mode) noexcept;
RetrievalMode retrieval_mode_from_string(std::string_view s);

/// Entropy breakpoints in nats. tau_low == tau_high means binary routing:
/// below the threshold no retrieval, at or above it a single retrieval step.
struct Thresholds {
  double tau_low = 0.4;
  double tau_high = 0.9;

  bool valid() const noexcept { return 0.0 <= tau_low && tau_low <= tau_high; }
  bool binary() const noexcept { return tau_low == tau_high; }

  friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

/// Throws invalid_thresholds with the message "tau_low > tau_high" (or a
/// negative-threshold message) when `t` is not valid.
void validate(const Thresholds& t);

struct RetrievalDecision {
  RetrievalMode mode = RetrievalMode::no_retrieval;
  double entropy = 0.0;
  Thresholds thresholds;
};

/// entropy < tau_low -> no retrieval; tau_low <= entropy < tau_high -> single
/// step; entropy >= tau_high -> multi step. Boundaries go to the mode with
/// more retrieval.
RetrievalDecision decide(double entropy, const Thresholds& t);

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

/// Outcome of one question under each of the three modes.
struct CalibrationRecord {
  double entropy = 0.0;
  bool correct_none = false;
  bool correct_single = false;
  bool correct_multi = false;
  /// Optional per-mode F1, required by the F1 objective.
  std::optional<double> f1_none;
  std::optional<double> f1_single;
  std::optional<double> f1_multi;
  /// Steps the multi-step loop took on this question; 2 when unknown.
  std::optional<std::size_t> multi_steps;
};

enum class CalibrationObjective { accuracy, f1 };

struct CalibrationOptions {
  std::size_t k_folds = 5;
  std::uint64_t seed = 0;
  CalibrationObjective objective = CalibrationObjective::accuracy;
};

struct GridScore {
  Thresholds thresholds;
  double cv_score = 0.0;      // mean over folds of the held-out score
  double expected_steps = 0.0;
};

/// All valid pairs over tau values 0.0, 0.1, ..., 2.0.
std::vector<Thresholds> default_grid();

/// Fold index per record: a seeded shuffle dealt round-robin into k folds.
std::vector<std::size_t> assign_folds(std::size_t num_records, std::size_t k_folds, std::uint64_t seed);

/// Cross-validated score of every grid pair, in grid order.
std::vector<GridScore> score_grid(std::span<const CalibrationRecord> records, std::span<const Thresholds> grid,
                                  const CalibrationOptions& options);

/// Grid pair with the best cross-validated score; ties go to fewer expected
/// retrieval steps, then smaller tau_low, then smaller tau_high.
GridScore calibrate(std::span<const CalibrationRecord> records, std::span<const Thresholds> grid,
                    const CalibrationOptions& options);

struct ProfileBucket {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  /// Closed-book accuracy: share of records correct without retrieval.
  double accuracy = 0.0;
  /// Share correct under the mode the thresholds pick.
  double routed_accuracy = 0.0;
  /// Share of records for which the thresholds trigger retrieval.
  double retrieval_frequency = 0.0;
};

/// Entropy histogram, bucket i covering [i*w, (i+1)*w). Empty buckets are
/// omitted; buckets are in ascending order.
std::vector<ProfileBucket> entropy_accuracy_profile(std::span<const CalibrationRecord> records,
                                                    const Thresholds& thresholds, double bucket_width = 0.1);

}  // namespace sugar
