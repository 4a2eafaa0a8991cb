#pragma once

#include <cstddef>
#include <functional>

namespace invlqr {

// Worker count: INVLQR_THREADS if set to a positive integer, else hardware concurrency.
unsigned thread_count();

// Calls fn(i) for i in [0, count) across up to thread_count() threads.
// The first exception thrown by any call is rethrown after all workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace invlqr
