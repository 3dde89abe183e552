#pragma once

#include <cstdint>
#include <functional>

namespace cdfm3sf {

// Global worker count for parallel_for. 1 = fully serial. Workers split the
// index range into contiguous chunks, so any kernel whose iterations write
// disjoint locations in a fixed per-iteration order produces bit-identical
// results at every thread count.
void set_num_threads(int n);
int num_threads();

void parallel_for(int64_t n, const std::function<void(int64_t begin, int64_t end)>& body);

}  // namespace cdfm3sf
