#ifndef COTRACK_PARALLEL_HPP_
#define COTRACK_PARALLEL_HPP_

#include <functional>
#include <thread>
#include <vector>

namespace cotrack {

// Runs fn(i) for i in [0, n). Each index writes only its own output slot,
// so results are identical at any thread count.
inline void parallel_for(int n, int threads,
                         const std::function<void(int)>& fn) {
  if (n <= 0) return;
  if (threads <= 1 || n == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  const int workers = std::min(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w]() {
      for (int i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace cotrack

#endif  // COTRACK_PARALLEL_HPP_
