#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace phaselink {

inline int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Run fn(i) for i in [0, n) over a fixed number of worker threads with static
/// index partitioning. Callers write only to per-index output slots, so the
/// result does not depend on the thread count. The first exception thrown by
/// any worker is rethrown on the calling thread.
inline void parallel_for(std::int64_t n, int threads,
                         const std::function<void(std::int64_t)>& fn) {
  threads = std::min<std::int64_t>(resolve_thread_count(threads), n);
  if (threads <= 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (int t = 0; t < threads; ++t) {
    const std::int64_t lo = n * t / threads;
    const std::int64_t hi = n * (t + 1) / threads;
    pool.emplace_back([&, lo, hi] {
      try {
        for (std::int64_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& worker : pool) worker.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace phaselink
