#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace preorder::detail {

// Calls fn(i) for i in [0, n) over `threads` workers with a static contiguous
// partition. Callers reduce per-index results themselves, in index order.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t chunk = (n + threads - 1) / threads;
  std::vector<std::exception_ptr> errors(threads);
  {
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < threads; ++w) {
      const std::size_t from = w * chunk;
      const std::size_t to = std::min(n, from + chunk);
      if (from >= to) break;
      workers.emplace_back([&fn, &errors, from, to, w] {
        try {
          for (std::size_t i = from; i < to; ++i) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace preorder::detail
