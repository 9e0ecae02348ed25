#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cosal/grid.hpp"

namespace cosal::dataset {

// Directory contract:
//   root/images/<group>/<name>.jpg|png
//   root/gt_object/<group>/<name>.png
//   root/gt_instance/<group>/<name>.png     (optional)
//   root/bboxes/<group>/<name>.txt          (optional; "label x0 y0 x1 y1" per line)
//   root/taxonomy.tsv                       ("group<TAB>super_class" per line)

inline constexpr std::size_t kMaxInstancesPerImage = 6;
inline constexpr std::size_t kMeanMaskCanvas = 256;

/// Inclusive pixel rectangle of one instance. `label` is the raw value used in
/// the instance PNG.
struct BoundingBox {
  std::uint32_t label = 0;
  std::size_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct ImageRecord {
  std::string name;
  std::filesystem::path image_path;  ///< empty when no image file was found
  LabelMask object;                  ///< 0/1
  std::optional<LabelMask> instances;  ///< compacted to 1..m
  std::vector<BoundingBox> bboxes;

  /// Distinct instance labels, or 1 for a non-empty object mask without instance GT.
  std::size_t instance_count() const;
};

struct GroupRecord {
  std::string group_id;
  std::string super_class;  ///< empty when the taxonomy has no entry
  std::vector<ImageRecord> images;  ///< sorted by name
};

struct ValidationEntry {
  std::string group;
  std::string image;
  std::string message;

  friend bool operator==(const ValidationEntry&, const ValidationEntry&) = default;
};

struct Dataset {
  std::filesystem::path root;
  std::vector<GroupRecord> groups;  ///< sorted by id
  std::map<std::string, std::string> taxonomy;
  std::vector<ValidationEntry> validation;

  std::size_t image_count() const noexcept;
  const GroupRecord* find(std::string_view group) const noexcept;
};

/// Loads and validates a dataset tree. Per-image faults become validation
/// entries and the image is skipped. Throws Error for a missing or empty root.
Dataset load_dataset(const std::filesystem::path& root, unsigned workers = 1);

std::map<std::string, std::string> parse_taxonomy(std::string_view text);
/// Throws FormatError on a malformed line.
std::vector<BoundingBox> parse_bboxes(std::string_view text);
/// Tight inclusive hull of every pixel carrying `label`; nullopt when absent.
std::optional<BoundingBox> label_hull(const LabelMask& mask, std::uint32_t label);

struct SizeStats {
  static constexpr std::size_t kBins = 10;

  std::uint64_t count = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  std::array<std::uint64_t, kBins> histogram{};  ///< ratio bins of width 0.1; 1.0 in the last
};

struct SuperClassStats {
  std::string name;
  std::size_t groups = 0;
  std::size_t images = 0;
};

struct DatasetStats {
  std::size_t n_groups = 0;
  std::size_t n_images = 0;
  std::size_t n_instances = 0;
  /// Images with 0 (empty GT), 1, 2 and >= 3 instances.
  std::array<std::uint64_t, 4> instance_count_histogram{};
  SizeStats instance_size;  ///< instance pixels / image pixels, per instance
  SizeStats object_size;    ///< object pixels / image pixels, per image
  std::vector<SuperClassStats> super_classes;  ///< sorted by name
  std::vector<std::pair<std::string, ScalarMap>> group_mean_masks;
  ScalarMap mean_mask;
};

/// Mean of the masks' 0/1 collapses on a canvas x canvas grid (bilinear).
ScalarMap mean_mask(std::span<const LabelMask> masks, std::size_t canvas = kMeanMaskCanvas);
ScalarMap mean_mask(const GroupRecord& group, std::size_t canvas = kMeanMaskCanvas);

/// Statistics over every loaded image. Order-sensitive sums run in a content
/// order, so results do not depend on file names.
DatasetStats compute_stats(const Dataset& dataset);

/// JSON summary (mean masks are omitted).
std::string stats_to_json(const DatasetStats& stats, std::span<const ValidationEntry> validation);

}  // namespace cosal::dataset
