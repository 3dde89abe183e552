#include "cdfm3sf/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <thread>
#include <vector>

namespace cdfm3sf {

namespace {
std::atomic<int> g_threads{1};
}

void set_num_threads(int n) { g_threads.store(n < 1 ? 1 : n); }
int num_threads() { return g_threads.load(); }

void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& body) {
  if (n <= 0) return;
  int workers = std::min<int64_t>(num_threads(), n);
  if (workers <= 1) {
    body(0, n);
    return;
  }
  int64_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int w = 1; w < workers; ++w) {
    int64_t b = w * chunk;
    int64_t e = std::min<int64_t>(b + chunk, n);
    if (b >= e) break;
    pool.emplace_back(body, b, e);
  }
  body(0, std::min<int64_t>(chunk, n));
  for (auto& t : pool) t.join();
}

}  // namespace cdfm3sf
