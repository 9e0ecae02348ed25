#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cosal/dataset.hpp"
#include "cosal/metrics.hpp"

namespace cosal::bench {

/// Scores of one model on one group. Scalar scores are per-image values
/// averaged over the group; the curves are per-image curves averaged the same way.
struct EvalRecord {
  std::string dataset;
  std::string group;
  std::string model;
  metrics::MetricScores scores;
  std::size_t n_images = 0;
  std::size_t n_missing = 0;  ///< images scored against an all-zero prediction
  metrics::Curve precision{};
  metrics::Curve recall{};
  metrics::Curve f_curve{};
  metrics::Curve e_curve{};

  friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

struct Evaluation {
  std::vector<EvalRecord> records;  ///< one per group, group order
  std::size_t gt_images = 0;
  std::size_t predictions_found = 0;
  std::vector<std::string> warnings;
};

/// Scores `<pred_root>/<group>/<name>.png` against every loaded GT image.
/// Predictions are resized (bilinear) to GT size; missing ones are scored as
/// all-zero maps and reported in a coverage warning. Throws Error when no
/// prediction matches any GT image, FormatError for an unreadable prediction.
Evaluation evaluate_model(const std::filesystem::path& pred_root, const dataset::Dataset& dataset,
                          std::string_view model, unsigned workers = 1);

/// Image-weighted aggregate of a set of records.
struct Summary {
  metrics::MetricScores scores;
  std::size_t n_images = 0;
  std::size_t n_groups = 0;
  /// Best fixed threshold over the averaged F and E curves.
  double f_fixed = 0.0;
  double e_fixed = 0.0;
  metrics::Curve precision{};
  metrics::Curve recall{};
  metrics::Curve f_curve{};
  metrics::Curve e_curve{};

  friend bool operator==(const Summary&, const Summary&) = default;
};

struct SuperClassSummary {
  std::string name;
  Summary summary;

  friend bool operator==(const SuperClassSummary&, const SuperClassSummary&) = default;
};

struct RunMetadata {
  std::string version;
  double beta_sq = metrics::kDefaultBetaSq;
  std::size_t threshold_count = metrics::kThresholdCount;
  std::string threshold_strategy;
  std::string e_mode;
  std::string aggregation;
  std::string f_comparison;
  std::vector<std::string> warnings;

  friend bool operator==(const RunMetadata&, const RunMetadata&) = default;
};

struct GroupRow {
  EvalRecord record;
  std::string super_class;
  double f_fixed = 0.0;
  double e_fixed = 0.0;

  friend bool operator==(const GroupRow&, const GroupRow&) = default;
};

struct Report {
  std::string dataset;
  std::string model;
  std::vector<GroupRow> groups;                   ///< sorted by group
  std::vector<SuperClassSummary> super_classes;   ///< sorted by name
  Summary overall;
  RunMetadata metadata;

  friend bool operator==(const Report&, const Report&) = default;
};

/// Fixed-order, image-weighted summary. Throws Error for an empty list.
Summary summarize(std::span<const EvalRecord> records);

/// Throws Error naming every group the taxonomy does not cover.
Report aggregate(std::vector<EvalRecord> records, const std::map<std::string, std::string>& taxonomy,
                 std::vector<std::string> warnings = {});

enum class Format { kCsv, kJson, kMarkdown };

Format parse_format(std::string_view name);
std::string emit(const Report& report, Format format);
/// Header line only.
std::string csv_header();
/// Lossless inverse of emit(report, Format::kJson). Throws FormatError.
Report report_from_json(std::string_view json);

/// Rows (model, threshold, precision, recall) of each report's overall
/// averaged PR curve, grouped by report then threshold ascending.
std::string emit_pr_data(std::span<const Report> reports);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double value);

}  // namespace cosal::bench
