#pragma once

#include <cstddef>
#include <functional>

namespace shotperc {

// Hardware concurrency, at least 1.
int default_thread_count();

// Calls body(i) once for every i in [0, n) on up to `threads` workers. Bodies must only
// write to slots owned by their index, so results never depend on the schedule. If any
// body throws, the exception from the lowest failing index is rethrown.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

}  // namespace shotperc
