// SPDX-FileCopyrightText: Copyright (c) 2026 The pocketrl Authors. All rights reserved.
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef POCKETRL_PARALLEL_HPP
#define POCKETRL_PARALLEL_HPP

#include <exception>
#include <mutex>

namespace pocketrl {

//! Worker count: POCKETRL_THREADS if set (>= 1), otherwise the OpenMP
//! default. Always 1 without OpenMP.
int worker_count();
//! Overrides the worker count for the current process (0 restores the default).
void set_worker_count(int n);

//! Runs fn(i) for i in [0, n). Each index must write only its own output
//! slot; results are then independent of the worker count. The first
//! exception thrown by any task is rethrown after all tasks finish.
template <typename Fn>
void parallel_for(int n, Fn&& fn) {
  std::exception_ptr error;
  std::mutex error_mutex;
  const int workers = worker_count();
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers) if (workers > 1)
  for (int i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) {
        error = std::current_exception();
      }
    }
  }
  if (error) {
    std::rethrow_exception(error);
  }
}

}  // namespace pocketrl

#endif  // POCKETRL_PARALLEL_HPP
