#include "cosal/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

namespace cosal {
namespace {

struct ReadCursor {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

struct ErrorSlot {
  char message[256];
};

void on_png_error(png_structp png, png_const_charp msg) {
  auto* slot = static_cast<ErrorSlot*>(png_get_error_ptr(png));
  std::snprintf(slot->message, sizeof(slot->message), "%s", msg);
  png_longjmp(png, 1);
}

void on_png_warning(png_structp, png_const_charp) {}

void read_bytes(png_structp png, png_bytep out, png_size_t n) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->size - cur->pos < n) png_error(png, "truncated PNG stream");
  std::memcpy(out, cur->data + cur->pos, n);
  cur->pos += n;
}

void write_bytes(png_structp png, png_bytep in, png_size_t n) {
  auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
  out->insert(out->end(), in, in + n);
}

void flush_noop(png_structp) {}

enum class DecodeMode { kValues, kLabels };

// Decoded rows as libpng hands them back; `channels` counts alpha when present.
struct Decoded {
  std::size_t height = 0;
  std::size_t width = 0;
  int channels = 0;
  int depth = 0;
  bool palette = false;
  std::vector<std::uint8_t> raw;
  std::vector<png_bytep> rows;
};

// Only trivially destructible locals live past setjmp; buffers belong to `out`.
bool decode_png(std::span<const std::uint8_t> bytes, DecodeMode mode, Decoded& out,
                ErrorSlot& err) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    std::snprintf(err.message, sizeof(err.message), "not a PNG file");
    return false;
  }
  ReadCursor cursor{bytes.data(), bytes.size(), 0};
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, on_png_error, on_png_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_set_read_fn(png, &cursor, read_bytes);
  png_read_info(png, info);

  const png_byte color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);
  out.palette = color_type == PNG_COLOR_TYPE_PALETTE;
  if (bit_depth < 8) png_set_packing(png);
  if (out.palette && mode == DecodeMode::kValues) {
    png_set_palette_to_rgb(png);
    out.palette = false;
  }
  if (mode == DecodeMode::kValues && bit_depth == 16) png_set_scale_16(png);
  png_read_update_info(png, info);

  out.width = png_get_image_width(png, info);
  out.height = png_get_image_height(png, info);
  out.channels = png_get_channels(png, info);
  out.depth = png_get_bit_depth(png, info);
  if (out.depth < 8) out.depth = bit_depth;
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  out.raw.resize(rowbytes * out.height);
  out.rows.resize(out.height);
  for (std::size_t r = 0; r < out.height; ++r) out.rows[r] = out.raw.data() + r * rowbytes;
  png_read_image(png, out.rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

Decoded decode_or_throw(std::span<const std::uint8_t> bytes, DecodeMode mode) {
  Decoded out;
  ErrorSlot err{};
  if (!decode_png(bytes, mode, out, err)) {
    throw FormatError(std::string("malformed PNG: ") + err.message);
  }
  if (out.width == 0 || out.height == 0) throw FormatError("malformed PNG: empty image");
  return out;
}

// Sample `c` of pixel `i`, in the file's own bit depth (sub-byte depths unpacked).
std::uint32_t sample(const Decoded& d, std::size_t i, int c) {
  const std::size_t idx = i * static_cast<std::size_t>(d.channels) + static_cast<std::size_t>(c);
  if (d.depth == 16) {
    return (static_cast<std::uint32_t>(d.raw[2 * idx]) << 8) | d.raw[2 * idx + 1];
  }
  return d.raw[idx];
}

bool encode_png(std::size_t height, std::size_t width, int depth, int channels,
                const std::vector<std::uint8_t>& raw, Bytes& out, ErrorSlot& err) {
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, on_png_error, on_png_warning);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    return false;
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, &out, write_bytes, flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), depth,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t rowbytes =
      width * static_cast<std::size_t>(channels) * static_cast<std::size_t>(depth / 8);
  for (std::size_t r = 0; r < height; ++r) {
    png_write_row(png, const_cast<png_bytep>(raw.data() + r * rowbytes));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

Bytes encode_or_throw(std::size_t height, std::size_t width, int depth, int channels,
                      const std::vector<std::uint8_t>& raw) {
  Bytes out;
  ErrorSlot err{};
  if (!encode_png(height, width, depth, channels, raw, out, err)) {
    throw Error(std::string("PNG encode failed: ") + err.message);
  }
  return out;
}

}  // namespace

ScalarMap decode_scalar_map(std::span<const std::uint8_t> png) {
  const Decoded d = decode_or_throw(png, DecodeMode::kValues);
  const std::size_t n = d.height * d.width;
  const bool color = d.channels >= 3;
  const double max_code = d.depth >= 8 ? 255.0 : static_cast<double>((1 << d.depth) - 1);
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    double byte;
    if (color) {
      const double r = sample(d, i, 0);
      const double g = sample(d, i, 1);
      const double b = sample(d, i, 2);
      byte = std::round(0.299 * r + 0.587 * g + 0.114 * b);
    } else {
      byte = sample(d, i, 0);
    }
    values[i] = std::clamp(byte / max_code, 0.0, 1.0);
  }
  return ScalarMap(d.height, d.width, std::move(values));
}

Bytes encode_scalar_map(const ScalarMap& map) {
  std::vector<std::uint8_t> raw(map.size());
  for (std::size_t i = 0; i < map.size(); ++i) {
    raw[i] = static_cast<std::uint8_t>(std::lround(map[i] * 255.0));
  }
  return encode_or_throw(map.height(), map.width(), 8, 1, raw);
}

LabelMask decode_label_mask(std::span<const std::uint8_t> png) {
  const Decoded d = decode_or_throw(png, DecodeMode::kLabels);
  const std::size_t n = d.height * d.width;
  Grid<LabelMask::Label> labels(d.height, d.width);
  const bool color = !d.palette && d.channels >= 3;
  for (std::size_t i = 0; i < n; ++i) {
    if (color) {
      labels[i] = (sample(d, i, 0) << 16) | (sample(d, i, 1) << 8) | sample(d, i, 2);
    } else {
      labels[i] = sample(d, i, 0);
    }
  }
  return LabelMask(std::move(labels));
}

Bytes encode_label_mask(const LabelMask& mask) {
  if (mask.size() == 0) throw Error("cannot encode an empty mask");
  const auto max_label = *std::max_element(mask.values().begin(), mask.values().end());
  if (max_label > 65535) throw Error("label exceeds 16-bit PNG range");
  if (max_label <= 255) {
    std::vector<std::uint8_t> raw(mask.values().begin(), mask.values().end());
    return encode_or_throw(mask.height(), mask.width(), 8, 1, raw);
  }
  std::vector<std::uint8_t> raw(2 * mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    raw[2 * i] = static_cast<std::uint8_t>(mask[i] >> 8);
    raw[2 * i + 1] = static_cast<std::uint8_t>(mask[i] & 0xff);
  }
  return encode_or_throw(mask.height(), mask.width(), 16, 1, raw);
}

RgbImage decode_rgb(std::span<const std::uint8_t> png) {
  const Decoded d = decode_or_throw(png, DecodeMode::kValues);
  RgbImage out{d.height, d.width, std::vector<std::uint8_t>(3 * d.height * d.width)};
  const bool color = d.channels >= 3;
  const std::uint32_t scale = d.depth >= 8 ? 1 : 255 / ((1u << d.depth) - 1);
  const int shift = d.depth == 16 ? 8 : 0;
  for (std::size_t i = 0; i < d.height * d.width; ++i) {
    for (int c = 0; c < 3; ++c) {
      out.pixels[3 * i + static_cast<std::size_t>(c)] =
          static_cast<std::uint8_t>((sample(d, i, color ? c : 0) >> shift) * scale);
    }
  }
  return out;
}

Bytes encode_rgb(const RgbImage& image) {
  if (image.height == 0 || image.width == 0 || image.pixels.size() != 3 * image.height * image.width) {
    throw Error("RGB image payload does not match its shape");
  }
  return encode_or_throw(image.height, image.width, 8, 3, image.pixels);
}

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("short write to " + path.string());
}

namespace {

template <typename Fn>
auto with_path(const std::filesystem::path& path, Fn&& fn) {
  try {
    return fn(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace

ScalarMap read_scalar_map(const std::filesystem::path& path) {
  return with_path(path, [](const Bytes& b) { return decode_scalar_map(b); });
}

void write_scalar_map(const std::filesystem::path& path, const ScalarMap& map) {
  write_file(path, encode_scalar_map(map));
}

LabelMask read_label_mask(const std::filesystem::path& path) {
  return with_path(path, [](const Bytes& b) { return decode_label_mask(b); });
}

void write_label_mask(const std::filesystem::path& path, const LabelMask& mask) {
  write_file(path, encode_label_mask(mask));
}

RgbImage read_rgb(const std::filesystem::path& path) {
  return with_path(path, [](const Bytes& b) { return decode_rgb(b); });
}

void write_rgb(const std::filesystem::path& path, const RgbImage& image) {
  write_file(path, encode_rgb(image));
}

}  // namespace cosal
