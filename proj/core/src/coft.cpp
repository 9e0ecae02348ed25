#include "cosal/coft.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "cosal/image_io.hpp"

namespace cosal {
namespace {

std::uint32_t load_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void store_u32(std::uint8_t* p, std::uint32_t v) {
  p[0] = static_cast<std::uint8_t>(v);
  p[1] = static_cast<std::uint8_t>(v >> 8);
  p[2] = static_cast<std::uint8_t>(v >> 16);
  p[3] = static_cast<std::uint8_t>(v >> 24);
}

float load_f32(const std::uint8_t* p) { return std::bit_cast<float>(load_u32(p)); }

}  // namespace

std::string_view describe(CoftFault fault) noexcept {
  switch (fault) {
    case CoftFault::kTruncatedHeader: return "truncated header";
    case CoftFault::kBadMagic: return "bad magic";
    case CoftFault::kUnsupportedVersion: return "unsupported version";
    case CoftFault::kZeroDimension: return "zero dimension";
    case CoftFault::kPayloadLengthMismatch: return "payload length mismatch";
    case CoftFault::kNonFinite: return "non-finite values";
  }
  return "unknown fault";
}

CoftShape verify_coft(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kCoftHeaderBytes) throw CoftError(CoftFault::kTruncatedHeader);
  if (std::memcmp(bytes.data(), kCoftMagic.data(), kCoftMagic.size()) != 0) {
    throw CoftError(CoftFault::kBadMagic);
  }
  if (load_u32(bytes.data() + 4) != kCoftVersion) throw CoftError(CoftFault::kUnsupportedVersion);
  const CoftShape shape{load_u32(bytes.data() + 8), load_u32(bytes.data() + 12),
                        load_u32(bytes.data() + 16)};
  if (shape.height == 0 || shape.width == 0 || shape.channels == 0) {
    throw CoftError(CoftFault::kZeroDimension);
  }
  const std::uint64_t count =
      std::uint64_t{shape.height} * std::uint64_t{shape.width} * std::uint64_t{shape.channels};
  if (bytes.size() - kCoftHeaderBytes != count * 4) {
    throw CoftError(CoftFault::kPayloadLengthMismatch);
  }
  const std::uint8_t* payload = bytes.data() + kCoftHeaderBytes;
  for (std::uint64_t i = 0; i < count; ++i) {
    if (!std::isfinite(load_f32(payload + 4 * i))) throw CoftError(CoftFault::kNonFinite);
  }
  return shape;
}

FeatureStack decode_coft(std::span<const std::uint8_t> bytes) {
  const CoftShape shape = verify_coft(bytes);
  const std::size_t count = std::size_t{shape.height} * shape.width * shape.channels;
  std::vector<double> values(count);
  const std::uint8_t* payload = bytes.data() + kCoftHeaderBytes;
  for (std::size_t i = 0; i < count; ++i) values[i] = load_f32(payload + 4 * i);
  return FeatureStack(shape.height, shape.width, shape.channels, std::move(values));
}

std::vector<std::uint8_t> encode_coft(const FeatureStack& stack) {
  const auto values = stack.values();
  std::vector<std::uint8_t> out(kCoftHeaderBytes + 4 * values.size());
  std::memcpy(out.data(), kCoftMagic.data(), kCoftMagic.size());
  store_u32(out.data() + 4, kCoftVersion);
  store_u32(out.data() + 8, static_cast<std::uint32_t>(stack.height()));
  store_u32(out.data() + 12, static_cast<std::uint32_t>(stack.width()));
  store_u32(out.data() + 16, static_cast<std::uint32_t>(stack.channels()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const float f = static_cast<float>(values[i]);
    if (!std::isfinite(f)) throw CoftError(CoftFault::kNonFinite);
    store_u32(out.data() + kCoftHeaderBytes + 4 * i, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

FeatureStack read_coft(const std::filesystem::path& path) {
  const Bytes bytes = read_file(path);
  try {
    return decode_coft(bytes);
  } catch (const CoftError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_coft(const std::filesystem::path& path, const FeatureStack& stack) {
  write_file(path, encode_coft(stack));
}

}  // namespace cosal
