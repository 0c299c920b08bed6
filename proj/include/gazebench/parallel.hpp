#pragma once

#include <cstddef>
#include <functional>

namespace gazebench {

// Worker count: GAZEBENCH_THREADS when set to a positive integer, otherwise
// the hardware concurrency (at least 1).
unsigned worker_count();

// Runs fn(i) for i in [0, n). Each index must write only its own outputs;
// callers reduce results afterwards in index order.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace gazebench
