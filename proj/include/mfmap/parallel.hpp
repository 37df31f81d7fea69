#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace mfmap {

// Number of worker threads to use. Resolution order: explicit request,
// MFMAP_THREADS environment variable, hardware concurrency.
int resolve_threads(int requested = 0);

// Runs fn(i) for i in [0, n) across up to `threads` workers using a static
// block partition. Each index writes only to its own output slot, so results
// are identical for any thread count. The first exception thrown by a worker
// is rethrown on the calling thread.
void parallel_for(std::size_t n, int threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace mfmap
