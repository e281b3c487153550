#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace slab {

/// Worker cap: SLAB_THREADS if set to a positive integer, otherwise the
/// number of logical cores.
inline unsigned thread_count() {
  if (const char* env = std::getenv("SLAB_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace detail {
inline thread_local bool in_worker = false;
}

/// Runs fn(i) for i in [0, n). Each index is handled by exactly one worker;
/// results must be written to per-index slots so that scheduling order never
/// shows up in the output. The first exception thrown is rethrown. Nested
/// calls from inside a worker run serially.
template <class F>
void parallel_for(std::size_t n, F&& fn) {
  const unsigned workers = detail::in_worker ? 1u
                                             : std::min<unsigned>(thread_count(),
                                                                  static_cast<unsigned>(std::max<std::size_t>(n, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      detail::in_worker = true;
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace slab
