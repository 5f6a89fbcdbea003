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

#ifndef POCKETRL_RNG_HPP
#define POCKETRL_RNG_HPP

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <string>

namespace pocketrl {

//! Seeded random stream. Uniform and Gaussian draws are computed here rather
//! than through std::*_distribution so that sequences are identical across
//! standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t next_u64() { return engine_(); }
  //! Uniform in [0, 1) with 53 random bits.
  double uniform();
  //! Uniform integer in [lo, hi] (inclusive).
  int uniform_int(int lo, int hi);
  //! Standard normal (Box-Muller, second value cached).
  double normal();

  template <typename Derived>
  void fill_normal(Eigen::DenseBase<Derived>& out) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      for (Eigen::Index i = 0; i < out.rows(); ++i) {
        out(i, j) = normal();
      }
    }
  }

  //! Textual engine state (including the cached normal) for checkpoints.
  std::string state() const;
  void set_state(const std::string& state);

  //! SplitMix64-style mixing used to derive independent per-task streams.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace pocketrl

#endif  // POCKETRL_RNG_HPP
