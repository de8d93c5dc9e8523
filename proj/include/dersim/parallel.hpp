#pragma once

#include <algorithm>
#include <cstddef>
#include <future>
#include <thread>
#include <vector>

namespace dersim {

/// f(0), ..., f(n-1) on up to `workers` threads; results keep index order.
template <class F>
auto parallel_map(std::size_t n, F&& f, unsigned workers = 0) {
  using R = decltype(f(std::size_t{}));
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<R> out;
  out.reserve(n);
  for (std::size_t begin = 0; begin < n; begin += workers) {
    const std::size_t end = std::min(n, begin + workers);
    std::vector<std::future<R>> batch;
    for (std::size_t k = begin; k < end; ++k) batch.push_back(std::async(std::launch::async, f, k));
    for (auto& job : batch) out.push_back(job.get());
  }
  return out;
}

}  // namespace dersim
