#pragma once

#include <cstddef>
#include <functional>

namespace emprobe {

// Worker count from EMPROBE_THREADS (unset or 0 = hardware concurrency).
int configured_threads();

// Runs fn(i) for i in [0, n). Work is spread over configured_threads()
// workers; calls made from inside a worker run serially so nested loops
// never oversubscribe. Exceptions are rethrown on the calling thread (the
// one from the lowest index wins, so error reporting is deterministic).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace emprobe
