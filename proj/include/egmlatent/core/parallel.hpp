#pragma once

#include <cstddef>
#include <functional>

namespace egmlatent {

/// Worker cap: EGM_LATENT_THREADS if set and positive, otherwise the
/// hardware concurrency.
std::size_t worker_count();

/// Runs body(i) for every i in [0, count) across the worker pool. Each index
/// is handled by exactly one call, so results written to per-index slots are
/// independent of the number of workers.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

}  // namespace egmlatent
