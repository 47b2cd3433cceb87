#pragma once

#include <cstddef>
#include <functional>

namespace bbi {

// Effective worker count: `requested` if positive, else BBI_WORKERS, else the
// hardware concurrency. Always at least 1.
int worker_count(int requested = 0);

// Runs task(i) for i in [0, n) on up to `workers` threads. Tasks must not share
// mutable state; results are written by index so scheduling never changes them.
// The first exception thrown by any task is rethrown after all threads join.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& task);

}  // namespace bbi
