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


#include "pocketrl/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pocketrl {

namespace {
std::atomic<int> g_override{0};
}  // namespace

int worker_count() {
#ifdef _OPENMP
  if (const int forced = g_override.load(); forced > 0) {
    return forced;
  }
  if (const char* env = std::getenv("POCKETRL_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) {
        return n;
      }
    } catch (const std::exception&) {
      // Fall through to the OpenMP default on malformed values.
    }
  }
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_worker_count(int n) { g_override.store(n > 0 ? n : 0); }

}  // namespace pocketrl
