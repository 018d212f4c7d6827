#pragma once

#include <algorithm>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "ksvm/types.hpp"

namespace ksvm {

/// Runs fn(begin, end) over [0, count) split into `threads` contiguous
/// chunks. The partition only decides who computes which items; callers keep
/// each item's arithmetic independent of it.
template <typename Fn>
void parallel_for(Index count, int threads, Fn&& fn) {
  if (count <= 0) return;
  const Index workers = std::clamp<Index>(threads, 1, count);
  if (workers == 1) {
    fn(Index{0}, count);
    return;
  }
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (Index w = 0; w < workers; ++w) {
      const Index begin = count * w / workers;
      const Index end = count * (w + 1) / workers;
      pool.emplace_back([&, begin, end] {
        try {
          fn(begin, end);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace ksvm
