#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <execution>
#include <mutex>
#include <numeric>
#include <vector>

namespace qrx::detail {

// Parallel loop over [0, n); the first exception thrown by a body is
// rethrown on the calling thread.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::exception_ptr error;
  std::mutex m;
  std::for_each(std::execution::par, idx.begin(), idx.end(), [&](std::size_t i) {
    try {
      fn(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(m);
      if (!error) error = std::current_exception();
    }
  });
  if (error) std::rethrow_exception(error);
}

}  // namespace qrx::detail
