// Regenerates tests/data. Inputs are deterministic; --golden also refreezes
// the golden outputs from the current library, so only pass it after the
// oracle suites agree with the change.

#include <cstring>
#include <filesystem>
#include <iostream>

#include "fixtures.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: make_fixtures <data-dir> [--golden]\n";
    return 2;
  }
  const std::filesystem::path data = argv[1];
  fixtures::write_mini_dataset(data / "mini");
  fixtures::write_stats_dataset(data / "stats");
  fixtures::write_invalid_dataset(data / "invalid");
  fixtures::write_pipeline_inputs(data / "pipeline");
  if (argc > 2 && std::strcmp(argv[2], "--golden") == 0) fixtures::write_goldens(data);
  return 0;
}
