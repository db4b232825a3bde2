#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace ipca {

// Runs fn(i) for i in [0, n). With threads > 1 the index range is split into
// contiguous chunks, one thread per chunk. Callers that reduce must write
// into pre-allocated per-index slots and sum them afterwards in index order;
// that keeps every reduction deterministic regardless of the thread count.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads));
  const int chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int begin = t * chunk;
    const int end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([begin, end, &fn] {
      for (int i = begin; i < end; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace ipca
