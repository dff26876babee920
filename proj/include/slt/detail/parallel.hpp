// OpenMP parallel-for that captures the first worker exception and rethrows
// it after the region, since exceptions must not unwind across an omp
// boundary. Workers write to disjoint slots; results never depend on the
// schedule.
#pragma once

#include <atomic>
#include <exception>

namespace slt::detail {

template <class F>
void parallel_for(int n, F&& worker) {
  std::atomic<bool> failed{false};
  std::exception_ptr err;
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    if (failed.load(std::memory_order_relaxed)) continue;
    try {
      worker(i);
    } catch (...) {
#pragma omp critical(slt_detail_parallel_err)
      {
        if (!failed.load(std::memory_order_relaxed)) {
          err = std::current_exception();
          failed.store(true, std::memory_order_relaxed);
        }
      }
    }
  }
  if (err) std::rethrow_exception(err);
}

}  // namespace slt::detail
