#pragma once

#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace trajent {

/// Worker count for parallel sections: TRAJENT_THREADS if set, otherwise
/// the hardware concurrency (at least 1).
inline unsigned thread_count() {
  if (const char* env = std::getenv("TRAJENT_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n >= 1) return static_cast<unsigned>(n);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

/// Runs fn(i) for i in [0, n) on up to thread_count() threads. Static
/// round-robin partition; callers own any per-index output slots, so the
/// result is independent of scheduling.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const unsigned workers = std::min<std::size_t>(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace trajent
