#pragma once

#include <cstddef>
#include <functional>

namespace polymer {

// Worker count: POLYMER_THREADS when set, otherwise hardware concurrency.
int worker_count();

// Runs body(0..n-1) on the worker pool. Each index must be an independent
// pure task writing only to its own output slot; the pool size then affects
// wall time only, never results.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace polymer
