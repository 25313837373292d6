#pragma once

#include <cstddef>
#include <functional>

namespace polsar {

/// Worker cap: POLSAR_THREADS if set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
int worker_count();

/// Runs fn(i) for i in [0, n) split into contiguous chunks over the worker
/// pool. The first exception thrown by any chunk is rethrown after all join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int workers = 0);

}  // namespace polsar
