#pragma once

#include <cstddef>
#include <functional>

namespace salgan {

/// Worker count from SALGAN_THREADS (0 or 1 = serial); defaults to the
/// hardware concurrency when unset.
std::size_t worker_count();

/// Runs body(i) for i in [0, n). Iterations must be independent; results are
/// identical for any worker count as long as each iteration writes only its
/// own output slot.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace salgan
