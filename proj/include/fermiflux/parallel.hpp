#pragma once

#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace fermiflux {

/// Number of worker threads to use, capped by the FERMIFLUX_THREADS
/// environment variable when set.
inline unsigned thread_budget() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("FERMIFLUX_THREADS")) {
    long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1 && static_cast<unsigned>(cap) < hw) return static_cast<unsigned>(cap);
  }
  return hw;
}

/// Runs body(i) for i in [0, n). Iterations must write to disjoint slots;
/// results are then independent of the thread count.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  unsigned workers = thread_budget();
  if (workers <= 1 || n < 2 * workers) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  std::size_t chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    std::size_t begin = w * chunk;
    std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&, begin, end] {
      try {
        for (std::size_t i = begin; i < end; ++i) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace fermiflux
