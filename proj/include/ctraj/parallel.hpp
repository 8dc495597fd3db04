#pragma once

#include <cstddef>
#include <functional>

namespace ctraj {

/// Worker count used by parallel_for when none is given (0 = hardware).
void set_default_threads(unsigned threads);
unsigned default_threads();

/// Runs body(i) for i in [0, count) on up to `threads` workers.  Results must
/// be written to per-index slots; the call returns after all indices finish.
/// Nested calls from inside a worker run serially.  The first exception
/// thrown by any body is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body, unsigned threads = 0);

}  // namespace ctraj
