#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cosal/grid.hpp"

namespace cosal {

// COFT activation files: "COFT", u32 version (1), u32 height, u32 width,
// u32 channels, then height*width*channels float32. Little-endian throughout,
// index order (i, j, k) with k fastest.

inline constexpr std::array<char, 4> kCoftMagic = {'C', 'O', 'F', 'T'};
inline constexpr std::uint32_t kCoftVersion = 1;
inline constexpr std::size_t kCoftHeaderBytes = 20;

struct CoftShape {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t channels = 0;

  friend bool operator==(const CoftShape&, const CoftShape&) = default;
};

/// Distinct reasons a COFT payload is rejected.
enum class CoftFault {
  kTruncatedHeader,
  kBadMagic,
  kUnsupportedVersion,
  kZeroDimension,
  kPayloadLengthMismatch,
  kNonFinite,
};

std::string_view describe(CoftFault fault) noexcept;

class CoftError : public FormatError {
 public:
  explicit CoftError(CoftFault fault) : FormatError(std::string(describe(fault))), fault_(fault) {}
  CoftFault fault() const noexcept { return fault_; }

 private:
  CoftFault fault_;
};

/// Validates every field; throws CoftError naming the first violation.
CoftShape verify_coft(std::span<const std::uint8_t> bytes);
FeatureStack decode_coft(std::span<const std::uint8_t> bytes);
/// Values are narrowed to float32.
std::vector<std::uint8_t> encode_coft(const FeatureStack& stack);

FeatureStack read_coft(const std::filesystem::path& path);
void write_coft(const std::filesystem::path& path, const FeatureStack& stack);

}  // namespace cosal
