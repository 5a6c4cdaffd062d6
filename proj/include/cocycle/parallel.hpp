#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace cocycle {

// Process-wide worker count for node-parallel loops. 1 = serial.
inline unsigned& thread_count() {
  static unsigned n = 1;
  return n;
}

inline void set_thread_count(unsigned n) {
  thread_count() = n == 0 ? std::max(1u, std::thread::hardware_concurrency()) : n;
}

// Chunked parallel for over [0, n). Falls back to a plain loop when serial
// or when the range is too small to amortize thread startup.
template <class F>
void parallel_for(std::size_t n, F&& body) {
  const unsigned workers = thread_count();
  if (workers <= 1 || n < 4096) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace cocycle
