#include "relu_interp/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace relu_interp {

int thread_budget() {
  int hw = static_cast<int>(std::thread::hardware_concurrency());
  if (hw <= 0) hw = 1;
  int budget = std::min(hw, 8);
  if (const char* env = std::getenv("RELU_INTERP_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v >= 0) {
      if (v == 0) return budget;  // 0 = auto
      return static_cast<int>(std::min<long>(v, 256));
    }
  }
  return budget;
}

void parallel_for(Index n, const std::function<void(Index)>& fn) {
  if (n <= 0) return;
  int threads = thread_budget();
  if (threads <= 1 || n < 4) {
    for (Index i = 0; i < n; ++i) fn(i);
    return;
  }
  threads = static_cast<int>(std::min<Index>(threads, n));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&, t]() {
      for (Index i = t; i < n; i += threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace relu_interp
