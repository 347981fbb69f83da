// Copyright 2026 The sepbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SEPBENCH_PARALLEL_HPP_
#define SEPBENCH_PARALLEL_HPP_

#include <cstdint>
#include <exception>
#include <mutex>
#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sepbench {

// Global thread budget. 0 = all hardware threads. Resolution order for the
// CLI: --threads flag, SEPBENCH_THREADS, default 0.
void set_threads(int n);
int thread_budget();      // the configured value (0 = all)
int effective_threads();  // the resolved positive count

// Parallel loop over [0, n). Bodies must write only to disjoint,
// index-addressed state so results are identical for every thread count.
// Exceptions thrown by bodies are captured and the first one rethrown.
template <typename Body>
void parallel_for(std::int64_t n, Body&& body) {
  const int threads = effective_threads();
  if (threads <= 1 || n <= 1) {
    for (std::int64_t i = 0; i < n; ++i) body(i);
    return;
  }
#ifdef _OPENMP
  std::exception_ptr error;
  std::mutex error_mutex;
#pragma omp parallel for schedule(static) num_threads(threads)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      body(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
#else
  for (std::int64_t i = 0; i < n; ++i) body(i);
#endif
}

// Serial reference driver; identical per-index math, no OpenMP. Kept so
// tests and the benchmark can compare against the parallel path.
template <typename Body>
void serial_for(std::int64_t n, Body&& body) {
  for (std::int64_t i = 0; i < n; ++i) body(i);
}

}  // namespace sepbench

#endif  // SEPBENCH_PARALLEL_HPP_
