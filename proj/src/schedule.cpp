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

#include "pocketrl/schedule.hpp"

namespace pocketrl {

template class BasicSchedule<double>;

std::vector<int> coarse_grid(int T, int stride) {
  if (T < 1 || stride < 1 || stride > T) {
    throw std::invalid_argument("coarse_grid: need 1 <= stride <= T");
  }
  std::vector<int> grid;
  grid.reserve(static_cast<std::size_t>(T / stride) + 2);
  for (int t = T; t > 0; t -= stride) {
    grid.push_back(t);
  }
  grid.push_back(0);
  return grid;
}

}  // namespace pocketrl
