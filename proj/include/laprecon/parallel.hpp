#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace laprecon {

/// Worker count used by per-point loops. 0 selects hardware concurrency.
void set_thread_count(unsigned n);
unsigned thread_count();

/**
 * Runs body(i) for i in [0, n) over contiguous chunks. Bodies must only
 * write to slot i of their outputs; reductions belong to the caller, in
 * index order, so results do not depend on the thread count.
 */
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  const std::size_t workers = std::min<std::size_t>(thread_count(), n / 256 + 1);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&body, begin, end] {
      for (std::size_t i = begin; i < end; ++i) body(i);
    });
  }
}

}  // namespace laprecon
