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

#include "sepbench/parallel.hpp"

#include <atomic>
#include <thread>

namespace sepbench {

namespace {
std::atomic<int> g_thread_budget{0};
}  // namespace

void set_threads(int n) { g_thread_budget.store(n < 0 ? 0 : n); }

int thread_budget() { return g_thread_budget.load(); }

int effective_threads() {
  const int budget = g_thread_budget.load();
  if (budget > 0) return budget;
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
#endif
}

}  // namespace sepbench
