#pragma once

#include <cstddef>
#include <functional>

namespace ftreg {

/// Number of workers used by parallel_for. Controlled by the FTREG_WORKERS
/// environment variable; defaults to the hardware concurrency.
int worker_count();

/// Runs fn(i) for i in [0, n). Work is split into per-worker index ranges;
/// callers write results by index, so the output is independent of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace ftreg
