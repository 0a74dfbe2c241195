#pragma once

#include <cstddef>
#include <functional>

namespace rf {

/// Worker cap: RF_THREADS when set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t worker_count();

/// Runs fn(0..n-1) on up to worker_count() threads. Items must be
/// independent; if any throw, the exception of the lowest index is rethrown
/// after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace rf
