#pragma once

#include <algorithm>
#include <cstddef>
#include <future>
#include <vector>

namespace potforge {

// Calls fn(i) for i in [0, n) on up to `workers` threads. Results land in
// index order regardless of completion order. Exceptions propagate from the
// lowest failing index.
template <typename Fn>
auto parallel_map(std::size_t n, int workers, Fn&& fn)
    -> std::vector<decltype(fn(std::size_t{}))> {
  using R = decltype(fn(std::size_t{}));
  std::vector<R> out;
  out.reserve(n);
  if (workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(fn(i));
    return out;
  }
  const std::size_t batch = static_cast<std::size_t>(workers);
  for (std::size_t start = 0; start < n; start += batch) {
    const std::size_t end = std::min(n, start + batch);
    std::vector<std::future<R>> futures;
    for (std::size_t i = start; i < end; ++i) {
      futures.push_back(std::async(std::launch::async, [&fn, i] { return fn(i); }));
    }
    for (auto& f : futures) out.push_back(f.get());
  }
  return out;
}

}  // namespace potforge
