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

#include "pocketrl/geometry.hpp"

#include "pocketrl/rng.hpp"

namespace pocketrl {

O3Transform sample_random_o3(std::uint64_t seed) {
  Rng rng(Rng::derive(seed, 0x03));
  Eigen::Matrix3d g;
  rng.fill_normal(g);
  Eigen::HouseholderQR<Eigen::Matrix3d> qr(g);
  Eigen::Matrix3d q = qr.householderQ();
  const Eigen::Matrix3d r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Sign correction makes Q Haar distributed.
  for (int k = 0; k < 3; ++k) {
    if (r(k, k) < 0.0) {
      q.col(k) = -q.col(k);
    }
  }
  if (q.determinant() < 0.0) {
    q.col(2) = -q.col(2);
  }
  if (rng.uniform() < 0.5) {
    q = q * Eigen::Vector3d(1.0, 1.0, -1.0).asDiagonal();
  }
  return O3Transform::from_matrix(q);
}

}  // namespace pocketrl
