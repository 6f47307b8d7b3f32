#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace glrc {

/// Worker cap: GLRC_THREADS if set and positive, else hardware concurrency.
std::size_t worker_count();

/// Splits [0, n) into contiguous blocks and calls fn(begin, end) for each,
/// one block per worker. Callers must write to disjoint outputs; results
/// are then independent of the worker count.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, std::size_t min_block = 64) {
  const std::size_t workers = std::min(worker_count(), (n + min_block - 1) / std::max<std::size_t>(min_block, 1));
  if (workers <= 1) {
    if (n > 0) fn(std::size_t{0}, n);
    return;
  }
  const std::size_t block = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t begin = w * block;
    const std::size_t end = std::min(n, begin + block);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  fn(std::size_t{0}, std::min(n, block));
  for (auto& t : pool) t.join();
}

}  // namespace glrc
