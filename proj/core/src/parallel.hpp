#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace mlbn::detail {

inline unsigned resolve_workers(unsigned requested) {
  if (requested > 0) return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

// Calls fn(k) for k in [0, count) on up to `workers` threads. Work items must
// write to disjoint outputs; the first exception is rethrown after joining.
template <class Fn>
void parallel_for(std::size_t count, unsigned workers, Fn&& fn) {
  workers = static_cast<unsigned>(std::min<std::size_t>(resolve_workers(workers), count));
  if (workers <= 1) {
    for (std::size_t k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < count; k = next++) {
        try {
          fn(k);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  pool.clear();
  if (error) std::rethrow_exception(error);
}

}  // namespace mlbn::detail
