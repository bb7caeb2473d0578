#pragma once

#include <cstddef>
#include <functional>

namespace densecrab {

/// Worker count: DENSECRAB_THREADS when set (clamped to >= 1), otherwise the
/// hardware concurrency.
std::size_t worker_count();

/// Runs fn(i) for every i in [0, n), splitting the range into contiguous
/// chunks across workers. fn(i) must only touch state owned by index i, so
/// results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace densecrab
