#pragma once

#include <cstdint>
#include <functional>

namespace uve {

// Worker parallelism cap. Reads UVE_THREADS once; unset or 0 falls back to
// the hardware thread count.
int max_threads();

// Splits [0, n) into one contiguous chunk per lane and runs fn(begin, end)
// on each. Every index is processed by exactly one lane, so results are
// bit-identical for any thread count. Runs inline when nested inside a
// worker or when there is nothing to split.
void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn);

}  // namespace uve
