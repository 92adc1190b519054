#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace absplat {

// Static block partition of [0, n) across `threads` workers. Each worker owns
// a contiguous index range, so work items that write disjoint outputs need no
// synchronization and results cannot depend on scheduling. Callers that need
// worker-count independence must make each item's output independent of the
// partition (disjoint writes plus a fixed-order reduction afterwards).
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  if (n == 0) return;
  if (threads < 1) threads = 1;
  const std::size_t workers = std::min<std::size_t>(std::size_t(threads), n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = n * w / workers;
    const std::size_t hi = n * (w + 1) / workers;
    pool.emplace_back([lo, hi, &fn] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace absplat
