#pragma once

#include <cstdint>
#include <functional>

namespace nullwave {

/// Worker count used by parallel_for. Reads NULLWAVE_THREADS once; falls back
/// to the hardware count. Always at least 1.
int thread_count();

/// Split [begin, end) into contiguous chunks and run body(b, e) on the pool.
/// Chunk boundaries are fixed by the range alone, and bodies write disjoint
/// outputs, so results do not depend on the worker count.
void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t, std::int64_t)>& body);

}  // namespace nullwave
