#pragma once

// Deterministic writers for the committed test data under tests/data. Only
// raw 64-bit engine output is used, so the bytes do not depend on the
// standard library's distribution implementations.

#include <filesystem>
#include <string>
#include <vector>

namespace fixtures {

/// 3 groups x 4 images (24 x 32), two super-classes, instance GT with raw
/// labels 10/20/30, bboxes and RGB images. Also writes the "noisy" prediction
/// tree to <root>/../mini_pred/noisy.
void write_mini_dataset(const std::filesystem::path& root);

/// One group "squares" of four 256 x 256 centred squares with sides 32, 64,
/// 96 and 128 split into 1, 2, 3 and 1 instances.
void write_stats_dataset(const std::filesystem::path& root);

/// One group holding one valid image and one image per planted fault.
void write_invalid_dataset(const std::filesystem::path& root);

/// COFT features (12 x 12 x 8, three images) and 24 x 24 priors for one group.
void write_pipeline_inputs(const std::filesystem::path& root);

/// Frozen outputs computed by the library from the inputs above.
void write_goldens(const std::filesystem::path& data_root);

/// Every regular file below `root`, relative, sorted.
std::vector<std::filesystem::path> list_files(const std::filesystem::path& root);

}  // namespace fixtures
