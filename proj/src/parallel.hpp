#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace stopline::detail {

inline unsigned worker_count() {
  if (const char* env = std::getenv("STOPLINE_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return static_cast<unsigned>(n);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(k) for k in [0, n) over contiguous chunks. Each k must write
/// only its own output slot, so results do not depend on scheduling.
template <class F>
void parallel_for(long n, F&& body) {
  const unsigned workers = static_cast<unsigned>(std::min<long>(worker_count(), std::max<long>(1, n / 256)));
  if (workers <= 1) {
    for (long k = 0; k < n; ++k) body(k);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  const long chunk = (n + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const long lo = w * chunk;
    const long hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, w, lo, hi] {
      try {
        for (long k = lo; k < hi; ++k) body(k);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  // The lowest chunk holds the failure with the smallest index.
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace stopline::detail
