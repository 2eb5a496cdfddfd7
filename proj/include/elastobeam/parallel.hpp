#pragma once

#include <cstddef>
#include <functional>

namespace elastobeam {

/// Worker count: ELASTOBEAM_THREADS if set to a positive integer, else the hardware concurrency.
unsigned thread_count() noexcept;

/// Calls fn(i) for i in [0, n) across worker threads. Each index is visited exactly once;
/// callers write results into per-index slots so the combine order stays deterministic.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace elastobeam
