#pragma once

#include <cstddef>
#include <functional>

namespace fairrec {

/// Worker count: hardware concurrency capped by FAIRREC_THREADS when set.
std::size_t thread_budget();

/// Runs body(begin, end) over contiguous chunks of [0, n) on up to
/// thread_budget() threads. Chunk boundaries depend only on n and
/// chunk_count, never on the thread count, so per-chunk results combine
/// deterministically.
void parallel_chunks(std::size_t n, std::size_t chunk_count,
                     const std::function<void(std::size_t chunk, std::size_t begin, std::size_t end)>& body);

/// Convenience: one call per index.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace fairrec
