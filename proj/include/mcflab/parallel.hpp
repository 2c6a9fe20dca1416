#pragma once

#include <cstddef>
#include <functional>

namespace mcflab {

/// Worker cap from MCFLAB_THREADS (0 or unset = hardware concurrency).
int worker_count();

/// Splits [0, count) into contiguous chunks, one per worker. body(begin, end)
/// must only write state owned by its own range; results then do not depend
/// on the number of workers.
void parallel_for(std::size_t count, const std::function<void(std::size_t, std::size_t)>& body);

} // namespace mcflab
