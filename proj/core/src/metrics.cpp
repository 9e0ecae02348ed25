#include "cosal/metrics.hpp"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <vector>

namespace cosal::metrics {
namespace {

void require_same_shape(const ScalarMap& pred, const LabelMask& gt) {
  if (!pred.same_shape(gt.grid())) {
    throw DimensionMismatch(pred.height(), pred.width(), gt.height(), gt.width());
  }
}

// MATLAB's eps, used by the structure-measure formulas.
constexpr double kEps = DBL_EPSILON;

// Foreground/background statistics term.
double object_score(const std::vector<double>& values) {
  const auto n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / n;
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  const double sigma = values.size() > 1 ? std::sqrt(sq / (n - 1.0)) : 0.0;
  return 2.0 * mean / (mean * mean + 1.0 + sigma + kEps);
}

double object_similarity(const ScalarMap& pred, const LabelMask& gt, std::size_t fg_count) {
  std::vector<double> fg;
  std::vector<double> bg;
  fg.reserve(fg_count);
  bg.reserve(pred.size() - fg_count);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (gt.is_foreground(i)) {
      fg.push_back(pred[i]);
    } else {
      bg.push_back(1.0 - pred[i]);
    }
  }
  const double u = static_cast<double>(fg_count) / static_cast<double>(pred.size());
  return u * object_score(fg) + (1.0 - u) * object_score(bg);
}

struct Block {
  std::size_t row0, row1, col0, col1;
};

double block_ssim(const ScalarMap& pred, const LabelMask& gt, const Block& b) {
  const std::size_t n = (b.row1 - b.row0) * (b.col1 - b.col0);
  const auto nd = static_cast<double>(n);
  double sx = 0.0;
  double sy = 0.0;
  for (std::size_t r = b.row0; r < b.row1; ++r) {
    for (std::size_t c = b.col0; c < b.col1; ++c) {
      sx += pred(r, c);
      sy += gt(r, c) != 0 ? 1.0 : 0.0;
    }
  }
  const double x = sx / nd;
  const double y = sy / nd;
  double vx = 0.0;
  double vy = 0.0;
  double cxy = 0.0;
  for (std::size_t r = b.row0; r < b.row1; ++r) {
    for (std::size_t c = b.col0; c < b.col1; ++c) {
      const double dx = pred(r, c) - x;
      const double dy = (gt(r, c) != 0 ? 1.0 : 0.0) - y;
      vx += dx * dx;
      vy += dy * dy;
      cxy += dx * dy;
    }
  }
  vx /= nd - 1.0 + kEps;
  vy /= nd - 1.0 + kEps;
  cxy /= nd - 1.0 + kEps;
  const double alpha = 4.0 * x * y * cxy;
  const double beta = (x * x + y * y) * (vx + vy);
  if (alpha != 0.0) return alpha / (beta + kEps);
  if (beta == 0.0) return 1.0;
  return 0.0;
}

double region_similarity_at(const ScalarMap& pred, const LabelMask& gt, std::size_t split_row,
                            std::size_t split_col) {
  const std::size_t h = pred.height();
  const std::size_t w = pred.width();
  const Block blocks[4] = {{0, split_row, 0, split_col},
                           {0, split_row, split_col, w},
                           {split_row, h, 0, split_col},
                           {split_row, h, split_col, w}};
  const auto area = static_cast<double>(h * w);
  double q = 0.0;
  for (const Block& b : blocks) {
    const std::size_t n = (b.row1 - b.row0) * (b.col1 - b.col0);
    if (n == 0) continue;
    q += static_cast<double>(n) / area * block_ssim(pred, gt, b);
  }
  return q;
}

// Split boundaries nearest the foreground centroid along one axis. Pixel p
// has centre p + 1/2, so the centroid is sum(2p + 1) / (2 count). An exact
// half-integer centroid yields both neighbouring boundaries.
std::vector<std::size_t> centroid_splits(std::uint64_t weighted, std::uint64_t count) {
  const std::uint64_t denom = 2 * count;
  const std::uint64_t q = weighted / denom;
  const std::uint64_t rem = weighted % denom;
  if (rem < count) return {static_cast<std::size_t>(q)};
  if (rem > count) return {static_cast<std::size_t>(q + 1)};
  return {static_cast<std::size_t>(q), static_cast<std::size_t>(q + 1)};
}

double region_similarity(const ScalarMap& pred, const LabelMask& gt) {
  std::uint64_t count = 0;
  std::uint64_t row_weight = 0;
  std::uint64_t col_weight = 0;
  for (std::size_t r = 0; r < gt.height(); ++r) {
    for (std::size_t c = 0; c < gt.width(); ++c) {
      if (gt(r, c) == 0) continue;
      ++count;
      row_weight += 2 * r + 1;
      col_weight += 2 * c + 1;
    }
  }
  const auto rows = centroid_splits(row_weight, count);
  const auto cols = centroid_splits(col_weight, count);
  double q = 0.0;
  for (std::size_t r : rows) {
    for (std::size_t c : cols) q += region_similarity_at(pred, gt, r, c);
  }
  return q / static_cast<double>(rows.size() * cols.size());
}

}  // namespace

std::size_t threshold_level(double value) noexcept {
  const double scaled = std::floor(value * 255.0);
  std::size_t k = scaled <= 0.0 ? 0 : scaled >= 255.0 ? 255 : static_cast<std::size_t>(scaled);
  while (k < kThresholdCount - 1 && value >= threshold_value(k + 1)) ++k;
  while (k > 0 && value < threshold_value(k)) --k;
  return k;
}

PrecisionRecall precision_recall(const Confusion& c) noexcept {
  const std::uint64_t predicted = c.tp + c.fp;
  const std::uint64_t actual = c.tp + c.fn;
  if (actual == 0) return {predicted == 0 ? 1.0 : 0.0, 1.0};
  const double precision =
      predicted == 0 ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(predicted);
  return {precision, static_cast<double>(c.tp) / static_cast<double>(actual)};
}

double enhanced_alignment(const Confusion& c) noexcept {
  const auto n = static_cast<double>(c.total());
  const std::uint64_t predicted = c.tp + c.fp;
  const std::uint64_t actual = c.tp + c.fn;
  const double mean_pred = static_cast<double>(predicted) / n;
  if (actual == 0) return 1.0 - mean_pred;
  if (actual == c.total()) return mean_pred;
  const double mean_gt = static_cast<double>(actual) / n;
  auto enhanced = [&](double bin, double g) {
    const double phi_p = bin - mean_pred;
    const double phi_g = g - mean_gt;
    const double align = 2.0 * phi_p * phi_g / (phi_p * phi_p + phi_g * phi_g);
    return (align + 1.0) * (align + 1.0) / 4.0;
  };
  const double sum = static_cast<double>(c.tp) * enhanced(1.0, 1.0) +
                     static_cast<double>(c.fp) * enhanced(1.0, 0.0) +
                     static_cast<double>(c.fn) * enhanced(0.0, 1.0) +
                     static_cast<double>(c.tn) * enhanced(0.0, 0.0);
  return sum / n;
}

std::array<Confusion, kThresholdCount> sweep_confusion(const ScalarMap& pred,
                                                       const LabelMask& gt) {
  require_same_shape(pred, gt);
  std::array<std::uint64_t, kThresholdCount> fg_hist{};
  std::array<std::uint64_t, kThresholdCount> bg_hist{};
  std::uint64_t fg_total = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const std::size_t level = threshold_level(pred[i]);
    if (gt.is_foreground(i)) {
      ++fg_hist[level];
      ++fg_total;
    } else {
      ++bg_hist[level];
    }
  }
  const std::uint64_t bg_total = pred.size() - fg_total;
  std::array<Confusion, kThresholdCount> out{};
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  for (std::size_t k = kThresholdCount; k-- > 0;) {
    tp += fg_hist[k];
    fp += bg_hist[k];
    out[k] = {tp, fp, fg_total - tp, bg_total - fp};
  }
  return out;
}

Confusion confusion_at(const ScalarMap& pred, const LabelMask& gt, double threshold) {
  require_same_shape(pred, gt);
  Confusion c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] >= threshold;
    const bool g = gt.is_foreground(i);
    if (p && g) {
      ++c.tp;
    } else if (p) {
      ++c.fp;
    } else if (g) {
      ++c.fn;
    } else {
      ++c.tn;
    }
  }
  return c;
}

double mae(const ScalarMap& pred, const LabelMask& gt) {
  require_same_shape(pred, gt);
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    acc += std::abs(pred[i] - (gt.is_foreground(i) ? 1.0 : 0.0));
  }
  return acc / static_cast<double>(pred.size());
}

PRCurve pr_curve(const ScalarMap& pred, const LabelMask& gt) {
  const auto sweep = sweep_confusion(pred, gt);
  PRCurve curve;
  for (std::size_t k = 0; k < kThresholdCount; ++k) {
    const auto pr = precision_recall(sweep[k]);
    curve.thresholds[k] = threshold_value(k);
    curve.precision[k] = pr.precision;
    curve.recall[k] = pr.recall;
  }
  return curve;
}

double f_measure(double precision, double recall, double beta_sq) noexcept {
  const double denom = beta_sq * precision + recall;
  if (denom == 0.0) return 0.0;
  return (1.0 + beta_sq) * precision * recall / denom;
}

double f_max(const ScalarMap& pred, const LabelMask& gt, double beta_sq) {
  const auto sweep = sweep_confusion(pred, gt);
  double best = 0.0;
  for (const Confusion& c : sweep) {
    const auto pr = precision_recall(c);
    best = std::max(best, f_measure(pr.precision, pr.recall, beta_sq));
  }
  return best;
}

double f_adaptive(const ScalarMap& pred, const LabelMask& gt, double beta_sq) {
  const auto pr = precision_recall(confusion_at(pred, gt, adaptive_threshold(pred)));
  return f_measure(pr.precision, pr.recall, beta_sq);
}

double s_measure(const ScalarMap& pred, const LabelMask& gt) {
  require_same_shape(pred, gt);
  const std::size_t fg = gt.foreground_count();
  if (fg == 0) return 1.0 - pred.mean();
  if (fg == pred.size()) return pred.mean();
  constexpr double alpha = 0.5;
  const double q =
      alpha * object_similarity(pred, gt, fg) + (1.0 - alpha) * region_similarity(pred, gt);
  return std::clamp(q, 0.0, 1.0);
}

double e_measure(const ScalarMap& pred, const LabelMask& gt, EMode mode) {
  if (mode == EMode::kAdaptive) {
    return enhanced_alignment(confusion_at(pred, gt, adaptive_threshold(pred)));
  }
  const auto sweep = sweep_confusion(pred, gt);
  double best = 0.0;
  double sum = 0.0;
  for (const Confusion& c : sweep) {
    const double e = enhanced_alignment(c);
    best = std::max(best, e);
    sum += e;
  }
  return mode == EMode::kMax ? best : sum / static_cast<double>(kThresholdCount);
}

PairEvaluation evaluate_pair(const ScalarMap& pred, const LabelMask& gt, double beta_sq) {
  const auto sweep = sweep_confusion(pred, gt);
  PairEvaluation out;
  double f_best = 0.0;
  double e_best = 0.0;
  double e_sum = 0.0;
  for (std::size_t k = 0; k < kThresholdCount; ++k) {
    const auto pr = precision_recall(sweep[k]);
    out.pr.thresholds[k] = threshold_value(k);
    out.pr.precision[k] = pr.precision;
    out.pr.recall[k] = pr.recall;
    out.f_curve[k] = f_measure(pr.precision, pr.recall, beta_sq);
    out.e_curve[k] = enhanced_alignment(sweep[k]);
    f_best = std::max(f_best, out.f_curve[k]);
    e_best = std::max(e_best, out.e_curve[k]);
    e_sum += out.e_curve[k];
  }
  const Confusion adaptive = confusion_at(pred, gt, adaptive_threshold(pred));
  const auto adaptive_pr = precision_recall(adaptive);
  out.scores.f_max = f_best;
  out.scores.f_adaptive = f_measure(adaptive_pr.precision, adaptive_pr.recall, beta_sq);
  out.scores.mae = mae(pred, gt);
  out.scores.s_measure = s_measure(pred, gt);
  out.scores.e_max = e_best;
  out.scores.e_mean = e_sum / static_cast<double>(kThresholdCount);
  out.scores.e_adaptive = enhanced_alignment(adaptive);
  return out;
}

MetricScores score_pair(const ScalarMap& pred, const LabelMask& gt) {
  return evaluate_pair(pred, gt).scores;
}

}  // namespace cosal::metrics
