#pragma once

#include <cstddef>
#include <functional>

namespace liouville {

// Worker count: MF_THREADS when set to a positive integer, else the
// hardware concurrency (at least one).
int thread_count();

// Runs f(i) for i in [0, n) on up to thread_count() threads with a static
// split.  After all workers finish, the exception of the lowest failing
// index is rethrown.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& f);

}  // namespace liouville
