#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace geopipe {

/// Splits [0, count) into contiguous chunks and runs fn(begin, end) on up to
/// `jobs` threads. jobs <= 1 runs inline.
inline void parallel_chunks(int count, int jobs,
                            const std::function<void(int, int)>& fn) {
  if (count <= 0) return;
  if (jobs <= 1 || count == 1) {
    fn(0, count);
    return;
  }
  const int n = std::min(jobs, count);
  std::vector<std::thread> threads;
  threads.reserve(n);
  const int chunk = (count + n - 1) / n;
  for (int t = 0; t < n; ++t) {
    const int begin = t * chunk;
    const int end = std::min(count, begin + chunk);
    if (begin >= end) break;
    threads.emplace_back(fn, begin, end);
  }
  for (auto& th : threads) th.join();
}

inline int default_jobs() {
  const unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : static_cast<int>(n);
}

}  // namespace geopipe
