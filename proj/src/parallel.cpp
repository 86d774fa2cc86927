#include "gazelab/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace gazelab {

namespace {

thread_local bool inside_worker = false;

std::size_t env_thread_cap() {
  const char* raw = std::getenv("GAZELAB_THREADS");
  if (!raw) return 0;
  char* end = nullptr;
  long v = std::strtol(raw, &end, 10);
  if (end == raw || v < 1) return 1;
  return static_cast<std::size_t>(v);
}

}  // namespace

std::size_t worker_count() {
  std::size_t hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  std::size_t cap = env_thread_cap();
  if (cap > 0) hw = std::min(hw, cap);
  return hw;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = worker_count();
  // Thread startup costs ~tens of microseconds; below this there is nothing
  // to win.
  constexpr std::size_t kMinPerWorker = 2048;
  if (inside_worker || workers <= 1 || n < 2 * kMinPerWorker) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t used = std::min(workers, (n + kMinPerWorker - 1) / kMinPerWorker);
  const std::size_t chunk = (n + used - 1) / used;
  std::vector<std::thread> pool;
  pool.reserve(used);
  for (std::size_t w = 0; w < used; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      inside_worker = true;
      for (std::size_t i = lo; i < hi; ++i) fn(i);
      inside_worker = false;
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace gazelab
