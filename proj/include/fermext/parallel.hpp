// Deterministic fan-out over independent trials: results land in a
// pre-indexed vector, so the merge order never depends on the thread count.

#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace fermext {

template <typename Fn>
void parallel_for_ordered(std::size_t count, int threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const std::size_t nthreads = std::min<std::size_t>(threads, count);
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t t = 0; t < nthreads; ++t) {
    pool.emplace_back([t, nthreads, count, &fn] {
      for (std::size_t i = t; i < count; i += nthreads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace fermext
