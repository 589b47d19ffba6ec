#pragma once

#include <cstdint>
#include <functional>

#include "fvk/common.hpp"

namespace fvk {

// Worker cap for data-parallel loops. 1 (the default) runs everything on the
// calling thread.
void set_threads(int n);
int threads();

// Splits [begin, end) into contiguous chunks, at most threads() of them, and
// runs body(chunk_begin, chunk_end) for each. Chunks are disjoint, so results
// do not depend on the thread count as long as each index's work writes only
// its own outputs.
void parallel_for(i64 begin, i64 end, const std::function<void(i64, i64)>& body);

}  // namespace fvk
