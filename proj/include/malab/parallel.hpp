#pragma once

#include <cstddef>
#include <functional>

namespace malab {

/// Thread count from MA_EIGEN_THREADS, or 1 when unset or invalid.
int default_thread_count();

/// Run body(begin, end) over [0, count) split into contiguous static chunks.
/// Chunking depends only on (count, threads); callers that write results by
/// index and reduce afterwards in index order get thread-count-independent
/// output.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace malab
