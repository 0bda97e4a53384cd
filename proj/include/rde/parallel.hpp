#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rde {

namespace detail {
inline std::atomic<unsigned>& thread_budget()
{
  static std::atomic<unsigned> budget{1};
  return budget;
}
} // namespace detail

/// Upper bound on worker threads used by parallel_for. 0 means hardware concurrency.
inline void set_thread_count(unsigned n)
{
  if (n == 0) {
    n = std::max(1u, std::thread::hardware_concurrency());
  }
  detail::thread_budget().store(n);
}

inline unsigned thread_count() { return detail::thread_budget().load(); }

/// Runs body(i) for i in [0, n). Each index must only write its own output slot,
/// so results never depend on the thread count.
template <typename Body>
void parallel_for(std::size_t n, Body&& body)
{
  const std::size_t workers = std::min<std::size_t>(thread_count(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      body(i);
    }
    return;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) {
          failure = std::current_exception();
        }
        next.store(n);
      }
    }
  };

  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t t = 1; t < workers; ++t) {
    pool.emplace_back(worker);
  }
  worker();
  pool.clear();
  if (failure) {
    std::rethrow_exception(failure);
  }
}

} // namespace rde
