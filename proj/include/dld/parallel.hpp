#pragma once

#include <cstddef>
#include <functional>

namespace dld {

/// Worker count for a fan-out: `requested` (0 = hardware concurrency), capped
/// by the DLD_FORGE_THREADS environment variable and by `tasks`.
int worker_count(int requested, std::size_t tasks);

/// Runs body(i) for i in [0, count) on up to `workers` threads. Work is handed
/// out by index, so the set of calls is independent of scheduling. The first
/// exception thrown by any call is rethrown after all workers have joined.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& body);

}  // namespace dld
