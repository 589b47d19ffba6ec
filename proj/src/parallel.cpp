#include "fvk/parallel.hpp"

#include <atomic>
#include <thread>
#include <vector>

namespace fvk {

namespace {
std::atomic<int> g_threads{1};
}

void set_threads(int n) { g_threads.store(n < 1 ? 1 : n); }

int threads() { return g_threads.load(); }

void parallel_for(i64 begin, i64 end, const std::function<void(i64, i64)>& body) {
  const i64 total = end - begin;
  if (total <= 0) return;
  const int t = threads();
  if (t <= 1 || total == 1) {
    body(begin, end);
    return;
  }
  const i64 workers = std::min<i64>(t, total);
  const i64 chunk = (total + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers) - 1);
  for (i64 wi = 1; wi < workers; ++wi) {
    const i64 b = begin + wi * chunk;
    const i64 e = std::min(end, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&body, b, e] { body(b, e); });
  }
  body(begin, std::min(end, begin + chunk));
  for (auto& th : pool) th.join();
}

}  // namespace fvk
