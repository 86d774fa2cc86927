#ifndef GAZELAB_PARALLEL_HPP
#define GAZELAB_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace gazelab {

// Worker cap: min(hardware threads, GAZELAB_THREADS) with a floor of 1.
std::size_t worker_count();

// Runs fn(i) for i in [0, n). Splits into contiguous index blocks across
// workers when n is large enough to amortize thread startup; otherwise runs
// inline. fn must write to disjoint state per index. Nested calls from a
// worker run inline, so composed loops never oversubscribe.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace gazelab

#endif  // GAZELAB_PARALLEL_HPP
