#pragma once

// Static-partition parallel loop. Each index is handled by exactly one worker
// and the partition depends only on the thread count, so per-item results do
// not depend on scheduling. Flop tallies of the workers are merged into the
// caller's counter.

#include <cstdlib>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "cfmm/scalar.hpp"

namespace cfmm {

/// Worker count from CFMM_THREADS, defaulting to the hardware concurrency.
inline int thread_count() {
  if (const char* env = std::getenv("CFMM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1 || v > 1024)
      throw std::invalid_argument("CFMM_THREADS must be a positive integer, got '" + std::string(env) + "'");
    return static_cast<int>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

template <class F>
void parallel_for(std::size_t n, F&& f, int threads = thread_count()) {
  if (n == 0) return;
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::vector<FlopCounter> tallies(workers);
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      const std::size_t lo = n * w / workers, hi = n * (w + 1) / workers;
      FlopScope scope;
      try {
        for (std::size_t i = lo; i < hi; ++i) f(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
      tallies[w] = scope.elapsed();
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& t : tallies) thread_flops() += t;
  if (error) std::rethrow_exception(error);
}

}  // namespace cfmm
