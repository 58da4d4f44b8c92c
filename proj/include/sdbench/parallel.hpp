#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sdbench {

inline std::size_t resolve_workers(std::size_t requested, std::size_t jobs) {
  std::size_t w = requested != 0 ? requested : std::thread::hardware_concurrency();
  if (w == 0) w = 1;
  return std::max<std::size_t>(1, std::min(w, jobs));
}

/// Runs fn(i) for i in [0, n) on up to `workers` threads (0 = all cores).
/// Work is pulled from a shared counter; callers write results by index so
/// the outcome does not depend on scheduling. The first exception thrown by
/// any job is rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  if (n == 0) return;
  const std::size_t w = resolve_workers(workers, n);
  if (w == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(w - 1);
    for (std::size_t t = 0; t + 1 < w; ++t) pool.emplace_back(body);
    body();
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace sdbench
