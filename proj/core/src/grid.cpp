#include "cosal/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace cosal {

DimensionMismatch::DimensionMismatch(std::size_t h1, std::size_t w1, std::size_t h2,
                                     std::size_t w2)
    : Error("dimension mismatch: " + std::to_string(h1) + "x" + std::to_string(w1) + " vs " +
            std::to_string(h2) + "x" + std::to_string(w2) + " (resample first)") {}

namespace {

void check_unit_interval(const RealGrid& grid) {
  if (grid.height() == 0 || grid.width() == 0) throw Error("scalar map must be at least 1x1");
  for (double v : grid.values()) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error("scalar map value outside [0, 1]");
  }
}

struct AxisTap {
  std::size_t lo;
  std::size_t hi;
  double frac;
};

std::vector<AxisTap> bilinear_taps(std::size_t in, std::size_t out) {
  std::vector<AxisTap> taps(out);
  for (std::size_t i = 0; i < out; ++i) {
    const double src = out == 1 ? static_cast<double>(in - 1) / 2.0
                                : static_cast<double>(i) * static_cast<double>(in - 1) /
                                      static_cast<double>(out - 1);
    auto lo = static_cast<std::size_t>(std::floor(src));
    lo = std::min(lo, in - 1);
    const std::size_t hi = std::min(lo + 1, in - 1);
    taps[i] = {lo, hi, src - static_cast<double>(lo)};
  }
  return taps;
}

struct AreaSpan {
  std::vector<std::pair<std::size_t, double>> weights;
  double total = 0.0;
};

// Input coverage of each output cell on [0, in), measured in input units.
std::vector<AreaSpan> area_spans(std::size_t in, std::size_t out) {
  std::vector<AreaSpan> spans(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t o = 0; o < out; ++o) {
    const double begin = static_cast<double>(o) * scale;
    const double end = static_cast<double>(o + 1) * scale;
    auto first = static_cast<std::size_t>(std::floor(begin));
    for (std::size_t i = first; i < in && static_cast<double>(i) < end; ++i) {
      const double w = std::min(end, static_cast<double>(i + 1)) -
                       std::max(begin, static_cast<double>(i));
      if (w > 0.0) {
        spans[o].weights.emplace_back(i, w);
        spans[o].total += w;
      }
    }
  }
  return spans;
}

}  // namespace

ScalarMap::ScalarMap(RealGrid grid) : grid_(std::move(grid)) { check_unit_interval(grid_); }

ScalarMap::ScalarMap(std::size_t height, std::size_t width, double fill)
    : ScalarMap(RealGrid(height, width, fill)) {}

ScalarMap::ScalarMap(std::size_t height, std::size_t width, std::vector<double> values)
    : ScalarMap(RealGrid(height, width, std::move(values))) {}

double ScalarMap::mean() const noexcept {
  return ordered_sum(grid_.values()) / static_cast<double>(grid_.size());
}

double ScalarMap::min() const noexcept {
  return *std::min_element(grid_.values().begin(), grid_.values().end());
}

double ScalarMap::max() const noexcept {
  return *std::max_element(grid_.values().begin(), grid_.values().end());
}

LabelMask::LabelMask(std::size_t height, std::size_t width, Label fill)
    : labels_(height, width, fill) {}

LabelMask::LabelMask(Grid<Label> labels) : labels_(std::move(labels)) {}

LabelMask LabelMask::binary() const {
  Grid<Label> out(height(), width());
  for (std::size_t i = 0; i < size(); ++i) out[i] = labels_[i] != 0 ? 1 : 0;
  return LabelMask(std::move(out));
}

LabelMask LabelMask::compacted(std::vector<Label>* mapping) const {
  std::vector<Label> present;
  for (Label l : labels_.values()) {
    if (l != 0) present.push_back(l);
  }
  std::sort(present.begin(), present.end());
  present.erase(std::unique(present.begin(), present.end()), present.end());
  Grid<Label> out(height(), width());
  for (std::size_t i = 0; i < size(); ++i) {
    const Label l = labels_[i];
    if (l == 0) continue;
    const auto it = std::lower_bound(present.begin(), present.end(), l);
    out[i] = static_cast<Label>(it - present.begin()) + 1;
  }
  if (mapping) *mapping = std::move(present);
  return LabelMask(std::move(out));
}

std::size_t LabelMask::instance_count() const {
  std::vector<Label> present;
  for (Label l : labels_.values()) {
    if (l != 0) present.push_back(l);
  }
  std::sort(present.begin(), present.end());
  return static_cast<std::size_t>(std::unique(present.begin(), present.end()) - present.begin());
}

std::size_t LabelMask::foreground_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(labels_.values().begin(), labels_.values().end(),
                    [](Label l) { return l != 0; }));
}

FeatureStack::FeatureStack(std::size_t fheight, std::size_t fwidth, std::size_t channels,
                           std::vector<double> values)
    : height_(fheight), width_(fwidth), channels_(channels), values_(std::move(values)) {
  if (height_ == 0 || width_ == 0 || channels_ == 0) {
    throw FormatError("feature stack dimensions must be non-zero");
  }
  if (values_.size() != height_ * width_ * channels_) {
    throw FormatError("feature stack payload length mismatch");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw FormatError("non-finite values");
  }
}

RealGrid resize_bilinear(const RealGrid& grid, std::size_t out_h, std::size_t out_w) {
  if (out_h == 0 || out_w == 0) throw Error("resize target must be at least 1x1");
  if (grid.empty()) throw Error("cannot resize an empty grid");
  if (grid.same_shape(out_h, out_w)) return grid;
  const auto rows = bilinear_taps(grid.height(), out_h);
  const auto cols = bilinear_taps(grid.width(), out_w);
  RealGrid out(out_h, out_w);
  for (std::size_t r = 0; r < out_h; ++r) {
    const AxisTap& ty = rows[r];
    for (std::size_t c = 0; c < out_w; ++c) {
      const AxisTap& tx = cols[c];
      const double top = std::lerp(grid(ty.lo, tx.lo), grid(ty.lo, tx.hi), tx.frac);
      const double bottom = std::lerp(grid(ty.hi, tx.lo), grid(ty.hi, tx.hi), tx.frac);
      out(r, c) = std::lerp(top, bottom, ty.frac);
    }
  }
  return out;
}

ScalarMap resize_bilinear(const ScalarMap& map, std::size_t out_h, std::size_t out_w) {
  RealGrid out = resize_bilinear(map.grid(), out_h, out_w);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(out[i], 0.0, 1.0);
  return ScalarMap(std::move(out));
}

RealGrid resize_area(const RealGrid& grid, std::size_t out_h, std::size_t out_w) {
  if (out_h == 0 || out_w == 0) throw Error("resize target must be at least 1x1");
  if (grid.same_shape(out_h, out_w)) return grid;
  const auto rows = area_spans(grid.height(), out_h);
  const auto cols = area_spans(grid.width(), out_w);
  RealGrid out(out_h, out_w);
  for (std::size_t r = 0; r < out_h; ++r) {
    for (std::size_t c = 0; c < out_w; ++c) {
      double acc = 0.0;
      for (const auto& [ri, rw] : rows[r].weights) {
        double row_acc = 0.0;
        for (const auto& [ci, cw] : cols[c].weights) row_acc += cw * grid(ri, ci);
        acc += rw * row_acc;
      }
      out(r, c) = acc / (rows[r].total * cols[c].total);
    }
  }
  return out;
}

ColorImage resize_area(const ColorImage& image, std::size_t out_h, std::size_t out_w) {
  ColorImage out{out_h, out_w, std::vector<double>(3 * out_h * out_w)};
  for (std::size_t ch = 0; ch < 3; ++ch) {
    RealGrid plane(image.height, image.width);
    for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = image.values[3 * i + ch];
    const RealGrid resized = resize_area(plane, out_h, out_w);
    for (std::size_t i = 0; i < resized.size(); ++i) out.values[3 * i + ch] = resized[i];
  }
  return out;
}

ScalarMap minmax_normalize(const RealGrid& grid) {
  if (grid.empty()) throw Error("cannot normalize an empty grid");
  const auto [lo_it, hi_it] = std::minmax_element(grid.values().begin(), grid.values().end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!std::isfinite(lo) || !std::isfinite(hi)) throw Error("cannot normalize non-finite grid");
  RealGrid out(grid.height(), grid.width(), 0.0);
  if (hi > lo) {
    const double range = hi - lo;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      out[i] = std::clamp((grid[i] - lo) / range, 0.0, 1.0);
    }
  }
  return ScalarMap(std::move(out));
}

LabelMask binarize(const ScalarMap& map, double threshold) {
  Grid<LabelMask::Label> out(map.height(), map.width());
  for (std::size_t i = 0; i < map.size(); ++i) out[i] = map[i] >= threshold ? 1 : 0;
  return LabelMask(std::move(out));
}

double adaptive_threshold(const ScalarMap& map) { return std::min(1.0, 2.0 * map.mean()); }

ColorImage rgb_to_lab(std::size_t height, std::size_t width, std::span<const std::uint8_t> rgb) {
  if (rgb.size() != 3 * height * width) throw Error("rgb buffer does not match its shape");
  auto linear = [](double c) {
    c /= 255.0;
    return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
  };
  auto f = [](double t) {
    constexpr double delta = 6.0 / 29.0;
    return t > delta * delta * delta ? std::cbrt(t) : t / (3.0 * delta * delta) + 4.0 / 29.0;
  };
  ColorImage out{height, width, std::vector<double>(rgb.size())};
  for (std::size_t i = 0; i < height * width; ++i) {
    const double r = linear(rgb[3 * i]);
    const double g = linear(rgb[3 * i + 1]);
    const double b = linear(rgb[3 * i + 2]);
    // D65 white point.
    const double x = (0.4124564 * r + 0.3575761 * g + 0.1804375 * b) / 0.95047;
    const double y = (0.2126729 * r + 0.7151522 * g + 0.0721750 * b);
    const double z = (0.0193339 * r + 0.1191920 * g + 0.9503041 * b) / 1.08883;
    const double fx = f(x);
    const double fy = f(y);
    const double fz = f(z);
    out.values[3 * i] = (116.0 * fy - 16.0) / 100.0;
    out.values[3 * i + 1] = 500.0 * (fx - fy) / 100.0;
    out.values[3 * i + 2] = 200.0 * (fy - fz) / 100.0;
  }
  return out;
}

double ordered_sum(std::span<const double> values) noexcept {
  double acc = 0.0;
  for (double v : values) acc += v;
  return acc;
}

}  // namespace cosal
