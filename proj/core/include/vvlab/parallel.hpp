#pragma once

#include <cstddef>
#include <functional>

namespace vvlab {

/// Worker count: hardware concurrency capped by the VVLAB_THREADS env var.
std::size_t worker_count();

/// Runs body(i) for i in [0, n). Each index runs exactly once; callers write
/// results into per-index slots and reduce afterwards in index order, so the
/// outcome does not depend on the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace vvlab
