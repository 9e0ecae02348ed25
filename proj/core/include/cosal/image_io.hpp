#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cosal/grid.hpp"

namespace cosal {

using Bytes = std::vector<std::uint8_t>;

/// 8-bit RGB pixels, interleaved.
struct RgbImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;
};

// PNG codecs. Decoders throw FormatError on malformed input.

/// Grayscale value = byte / 255. Colour input is converted to luma, 16-bit
/// input is scaled to 8 bits, alpha is ignored.
ScalarMap decode_scalar_map(std::span<const std::uint8_t> png);
/// 8-bit grayscale, byte = round(v * 255).
Bytes encode_scalar_map(const ScalarMap& map);

/// Raw labels: gray value (8 or 16 bit), palette index, or packed 24-bit RGB.
/// Labels are not compacted; call LabelMask::compacted() when needed.
LabelMask decode_label_mask(std::span<const std::uint8_t> png);
/// 8-bit gray when every label fits, 16-bit otherwise. Labels above 65535 throw.
Bytes encode_label_mask(const LabelMask& mask);

RgbImage decode_rgb(std::span<const std::uint8_t> png);
/// 8-bit RGB.
Bytes encode_rgb(const RgbImage& image);

ScalarMap read_scalar_map(const std::filesystem::path& path);
void write_scalar_map(const std::filesystem::path& path, const ScalarMap& map);
LabelMask read_label_mask(const std::filesystem::path& path);
void write_label_mask(const std::filesystem::path& path, const LabelMask& mask);
RgbImage read_rgb(const std::filesystem::path& path);
void write_rgb(const std::filesystem::path& path, const RgbImage& image);

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace cosal
