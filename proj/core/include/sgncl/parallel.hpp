#pragma once

#include <cstddef>
#include <functional>

namespace sgncl {

// Width of the worker pool used by parallel_for. Defaults to the available
// hardware parallelism; the CLI sets it from SGNCL_THREADS.
void set_worker_count(std::size_t workers);
std::size_t worker_count();

// Calls body(i) for i in [0, n). Iterations must write to disjoint outputs.
// Nested calls run serially on the calling worker. The first exception thrown
// by any iteration is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace sgncl
