#pragma once

#include <cstddef>
#include <functional>

namespace cosal {

/// Worker count: COSAL_WORKERS when set to a positive integer, else the
/// hardware concurrency (at least 1).
unsigned default_workers();

/// Runs body(i) for i in [0, n) on up to `workers` threads. Each index runs
/// exactly once; results must be written to per-index slots so the outcome
/// is independent of scheduling. The exception from the lowest failing index
/// is rethrown after all workers join.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& body);

}  // namespace cosal
