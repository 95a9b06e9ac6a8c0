#pragma once

#include <cstddef>
#include <functional>

namespace evodiff {

/// Number of worker threads node loops may use.  Defaults to 1 (fully
/// deterministic); the EVODIFF_THREADS environment variable raises the cap.
int thread_cap();

/// Runs fn(begin, end) over disjoint chunks of [0, n).  Serial when the
/// range is small or the cap is 1.  Chunk boundaries depend only on n and
/// the thread count, so pure per-index maps stay bitwise reproducible.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

} // namespace evodiff
