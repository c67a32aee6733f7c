#pragma once

#include <cstddef>
#include <functional>

namespace cws {

// Worker count: CWS_THREADS if set and positive, otherwise hardware concurrency.
unsigned worker_count();

// Runs body(i) for i in [0, count) on up to worker_count() threads. Each index
// is processed by exactly one call, so results written per index do not
// depend on scheduling. Nested calls from inside a worker run serially.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace cws
