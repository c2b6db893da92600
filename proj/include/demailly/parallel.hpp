#ifndef DEMAILLY_PARALLEL_HPP
#define DEMAILLY_PARALLEL_HPP

#include <functional>

namespace demailly {

/// Worker count: hardware concurrency capped by DEMAILLY_THREADS (cached).
int worker_count();

/// Runs fn(begin, end) over a fixed chunk partition of [0, n). Chunks are
/// identical for every run at a given worker count, and workers write to
/// disjoint indices, so results are deterministic.
void parallel_for(int n, const std::function<void(int, int)>& fn);

} // namespace demailly

#endif
