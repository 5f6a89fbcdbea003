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


#ifndef POCKETRL_TESTS_SUPPORT_HPP
#define POCKETRL_TESTS_SUPPORT_HPP

#include <numeric>
#include <vector>

#include "pocketrl/geometry.hpp"
#include "pocketrl/rng.hpp"

namespace pocketrl::testing {

inline PocketCloud random_pocket(int n, Rng& rng, double scale = 3.0) {
  PocketCloud p;
  p.coords.resize(n, 3);
  rng.fill_normal(p.coords);
  p.coords *= scale;
  p.types.resize(n);
  for (int i = 0; i < n; ++i) {
    p.types[i] = rng.uniform_int(0, kPocketTypes - 1);
  }
  return p;
}

//! Noisy-state-like ligand: centroid-free coordinates, Gaussian features.
inline LigandCloud random_noisy_ligand(int n, Rng& rng) {
  LigandCloud l;
  l.coords.resize(n, 3);
  l.features.resize(n, kLigandTypes);
  rng.fill_normal(l.coords);
  rng.fill_normal(l.features);
  l.coords = project_com_free(l.coords);
  return l;
}

inline LigandCloud random_clean_ligand(int n, Rng& rng) {
  Coords<double> c(n, 3);
  rng.fill_normal(c);
  std::vector<int> types(n);
  for (int i = 0; i < n; ++i) {
    types[i] = rng.uniform_int(0, kLigandTypes - 1);
  }
  return make_clean_ligand(c, types);
}

inline std::vector<int> random_permutation(int n, Rng& rng) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    std::swap(perm[i], perm[rng.uniform_int(0, i)]);
  }
  return perm;
}

inline double rel_error(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace pocketrl::testing

#endif  // POCKETRL_TESTS_SUPPORT_HPP
