#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "cosal/grid.hpp"

namespace cosal::metrics {

/// Thresholds {0, 1/255, ..., 1}; matches 8-bit map storage exactly.
inline constexpr std::size_t kThresholdCount = 256;
inline constexpr double kDefaultBetaSq = 0.3;

using Curve = std::array<double, kThresholdCount>;

constexpr double threshold_value(std::size_t k) noexcept {
  return static_cast<double>(k) / 255.0;
}

/// Largest k with value >= threshold_value(k). Values are assumed in [0, 1].
std::size_t threshold_level(double value) noexcept;

struct Confusion {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
  friend bool operator==(const Confusion&, const Confusion&) = default;
};

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

/// Empty-denominator conventions: with an empty GT, recall is 1 and precision
/// is 1 only when the prediction is empty too (0 otherwise). With a non-empty
/// GT and an empty prediction, precision is 0.
PrecisionRecall precision_recall(const Confusion& c) noexcept;

/// Enhanced-alignment score of one binary prediction. Degenerate GT: all
/// background gives 1 - mean(bin), all foreground gives mean(bin).
double enhanced_alignment(const Confusion& c) noexcept;

struct PRCurve {
  Curve thresholds{};
  Curve precision{};
  Curve recall{};
};

struct MetricScores {
  double f_max = 0.0;
  double f_adaptive = 0.0;
  double mae = 0.0;
  double s_measure = 0.0;
  double e_max = 0.0;
  double e_mean = 0.0;
  double e_adaptive = 0.0;

  friend bool operator==(const MetricScores&, const MetricScores&) = default;
};

enum class EMode { kMax, kMean, kAdaptive };

/// Confusion counts of binarize(pred, t_k) against the GT collapse, for all 256 t_k.
std::array<Confusion, kThresholdCount> sweep_confusion(const ScalarMap& pred, const LabelMask& gt);
Confusion confusion_at(const ScalarMap& pred, const LabelMask& gt, double threshold);

double mae(const ScalarMap& pred, const LabelMask& gt);
PRCurve pr_curve(const ScalarMap& pred, const LabelMask& gt);
double f_measure(double precision, double recall, double beta_sq = kDefaultBetaSq) noexcept;
/// Per-image maximum over the 256-level sweep.
double f_max(const ScalarMap& pred, const LabelMask& gt, double beta_sq = kDefaultBetaSq);
/// F at the adaptive threshold min(1, 2 mean(pred)).
double f_adaptive(const ScalarMap& pred, const LabelMask& gt, double beta_sq = kDefaultBetaSq);
double s_measure(const ScalarMap& pred, const LabelMask& gt);
double e_measure(const ScalarMap& pred, const LabelMask& gt, EMode mode);

/// Everything needed to score one image and to aggregate curves later.
struct PairEvaluation {
  MetricScores scores;
  PRCurve pr;
  Curve f_curve{};
  Curve e_curve{};
};

PairEvaluation evaluate_pair(const ScalarMap& pred, const LabelMask& gt,
                             double beta_sq = kDefaultBetaSq);
MetricScores score_pair(const ScalarMap& pred, const LabelMask& gt);

}  // namespace cosal::metrics
