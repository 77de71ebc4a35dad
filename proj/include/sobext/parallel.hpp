#pragma once

#include <cstddef>
#include <functional>

namespace sobext {

// Worker count: hardware concurrency, capped by FE_THREADS when set to a positive integer.
int worker_count();

// Calls body(i) for i in [0, n) across worker_count() threads. Each index is visited
// exactly once; callers write results into per-index slots and reduce in index order,
// so results do not depend on the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace sobext
