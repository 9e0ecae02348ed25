#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cosal/error.hpp"

namespace cosal {

/// Row-major 2-D grid. Shape is fixed at construction.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(std::size_t height, std::size_t width, T fill = T{})
      : height_(height), width_(width), data_(height * width, fill) {}
  Grid(std::size_t height, std::size_t width, std::vector<T> data)
      : height_(height), width_(width), data_(std::move(data)) {
    if (data_.size() != height_ * width_) throw Error("grid payload does not match its shape");
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t row, std::size_t col) noexcept { return data_[row * width_ + col]; }
  const T& operator()(std::size_t row, std::size_t col) const noexcept {
    return data_[row * width_ + col];
  }
  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  bool same_shape(std::size_t h, std::size_t w) const noexcept {
    return height_ == h && width_ == w;
  }
  template <typename U>
  bool same_shape(const Grid<U>& other) const noexcept {
    return same_shape(other.height(), other.width());
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<T> data_;
};

/// Unbounded real grid; raw projections before normalization.
using RealGrid = Grid<double>;

/// Grid of values in [0, 1]; saliency, attention and probability maps.
class ScalarMap {
 public:
  ScalarMap() = default;
  /// Throws if a value lies outside [0, 1], is non-finite, or the shape is empty.
  explicit ScalarMap(RealGrid grid);
  ScalarMap(std::size_t height, std::size_t width, double fill = 0.0);
  ScalarMap(std::size_t height, std::size_t width, std::vector<double> values);

  std::size_t height() const noexcept { return grid_.height(); }
  std::size_t width() const noexcept { return grid_.width(); }
  std::size_t size() const noexcept { return grid_.size(); }
  double operator()(std::size_t row, std::size_t col) const noexcept { return grid_(row, col); }
  double operator[](std::size_t i) const noexcept { return grid_[i]; }
  std::span<const double> values() const noexcept { return grid_.values(); }
  const RealGrid& grid() const noexcept { return grid_; }

  template <typename U>
  bool same_shape(const Grid<U>& other) const noexcept {
    return grid_.same_shape(other);
  }
  bool same_shape(const ScalarMap& other) const noexcept { return grid_.same_shape(other.grid_); }

  double mean() const noexcept;
  double min() const noexcept;
  double max() const noexcept;

  friend bool operator==(const ScalarMap&, const ScalarMap&) = default;

 private:
  RealGrid grid_;
};

/// Integer label grid: 0 is background, k > 0 is instance k.
class LabelMask {
 public:
  using Label = std::uint32_t;

  LabelMask() = default;
  LabelMask(std::size_t height, std::size_t width, Label fill = 0);
  explicit LabelMask(Grid<Label> labels);

  std::size_t height() const noexcept { return labels_.height(); }
  std::size_t width() const noexcept { return labels_.width(); }
  std::size_t size() const noexcept { return labels_.size(); }
  Label operator()(std::size_t row, std::size_t col) const noexcept { return labels_(row, col); }
  Label operator[](std::size_t i) const noexcept { return labels_[i]; }
  std::span<const Label> values() const noexcept { return labels_.values(); }
  const Grid<Label>& grid() const noexcept { return labels_; }

  bool is_foreground(std::size_t i) const noexcept { return labels_[i] != 0; }
  /// Object-level 0/1 collapse.
  LabelMask binary() const;
  /// Relabels to {0} ∪ {1..m}, preserving the order of the original labels.
  /// `mapping` (optional) receives the sorted original nonzero labels; label k
  /// in the result corresponds to mapping[k - 1].
  LabelMask compacted(std::vector<Label>* mapping = nullptr) const;
  /// Number of distinct nonzero labels.
  std::size_t instance_count() const;
  std::size_t foreground_count() const noexcept;

  friend bool operator==(const LabelMask&, const LabelMask&) = default;

 private:
  Grid<Label> labels_;
};

/// Activation stack X with index order (i, j, k), channel fastest.
class FeatureStack {
 public:
  FeatureStack() = default;
  /// Throws FormatError on non-finite values or a payload/shape mismatch.
  FeatureStack(std::size_t fheight, std::size_t fwidth, std::size_t channels,
               std::vector<double> values);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t cells() const noexcept { return height_ * width_; }

  /// Descriptor x(i, j) as a K-vector view.
  std::span<const double> descriptor(std::size_t row, std::size_t col) const noexcept {
    return {values_.data() + (row * width_ + col) * channels_, channels_};
  }
  std::span<const double> descriptor(std::size_t cell) const noexcept {
    return {values_.data() + cell * channels_, channels_};
  }
  std::span<const double> values() const noexcept { return values_; }

  friend bool operator==(const FeatureStack&, const FeatureStack&) = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t channels_ = 0;
  std::vector<double> values_;
};

/// Three-channel per-pixel colour, interleaved.
struct ColorImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;  // 3 * height * width

  std::span<const double> pixel(std::size_t i) const noexcept { return {values.data() + 3 * i, 3}; }
};

// Map operations.

/// Corner-aligned bilinear resampling. A 1-pixel output axis samples the input centre.
ScalarMap resize_bilinear(const ScalarMap& map, std::size_t out_h, std::size_t out_w);
RealGrid resize_bilinear(const RealGrid& grid, std::size_t out_h, std::size_t out_w);

/// Area-weighted box downsample (each output cell averages the input area it covers).
RealGrid resize_area(const RealGrid& grid, std::size_t out_h, std::size_t out_w);
ColorImage resize_area(const ColorImage& image, std::size_t out_h, std::size_t out_w);

/// (v - min) / (max - min); a constant grid maps to all zeros.
ScalarMap minmax_normalize(const RealGrid& grid);

/// 1 where value >= threshold.
LabelMask binarize(const ScalarMap& map, double threshold);

/// min(1, 2 * mean(map)).
double adaptive_threshold(const ScalarMap& map);

/// sRGB bytes (interleaved, 0..255) to CIELAB scaled by 1/100.
ColorImage rgb_to_lab(std::size_t height, std::size_t width, std::span<const std::uint8_t> rgb);

/// Deterministic, order-fixed sum.
double ordered_sum(std::span<const double> values) noexcept;

}  // namespace cosal
