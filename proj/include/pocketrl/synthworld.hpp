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


#ifndef POCKETRL_SYNTHWORLD_HPP
#define POCKETRL_SYNTHWORLD_HPP

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "pocketrl/geometry.hpp"
#include "pocketrl/rng.hpp"

namespace pocketrl {

struct WorldConfig {
  double pocket_radius  = 4.0;
  int n_pockets         = 50;
  int pocket_size_min   = 15;
  int pocket_size_max   = 25;
  int ligand_size_min   = 8;
  int ligand_size_max   = 14;
  std::uint64_t seed    = 0;

  void validate() const;
  bool operator==(const WorldConfig&) const = default;
};

//! Ligand atoms stay this far inside the pocket shell.
inline constexpr double kCavityMargin = 1.0;
//! Bonded-neighbour distance window used by the ligand builder.
inline constexpr double kBondMin = 0.9;
inline constexpr double kBondMax = 1.5;

//! Preferred ligand type for a pocket atom type (the composition the
//! affinity contact bonus rewards). Ligand type kLigandTypes-1 is never
//! preferred.
inline constexpr int preferred_ligand_type(int pocket_type) { return pocket_type; }

struct Complex {
  PocketCloud pocket;
  LigandCloud ligand;
};

//! Complex `index` of the world, in the pocket frame (cavity centre at the
//! origin, opening toward +z). Deterministic per (seed, index).
Complex generate_complex(const WorldConfig& cfg, int index);

struct World {
  WorldConfig config;
  std::vector<Complex> complexes;
};

World generate_world(const WorldConfig& cfg);

//! Mean of the normalized per-ligand type histograms; the composition target
//! of the qed-like oracle.
Eigen::VectorXd target_histogram(const std::vector<Complex>& complexes);

//! Normalized type histogram of one ligand (kLigandTypes bins).
Eigen::VectorXd type_histogram(const LigandCloud& ligand);

//! Empirical p(N_M | N_P).
class SizeSampler {
 public:
  SizeSampler() = default;
  static SizeSampler from_complexes(const std::vector<Complex>& complexes);
  static SizeSampler from_counts(std::map<int, std::map<int, long>> counts);

  //! Draws N_M for the nearest populated N_P bucket (ties go to the smaller
  //! bucket). Throws on an empty sampler.
  int sample(int n_pocket, Rng& rng) const;
  //! Normalized conditional distribution of the bucket used for `n_pocket`.
  std::map<int, double> conditional(int n_pocket) const;
  int nearest_bucket(int n_pocket) const;

  const std::map<int, std::map<int, long>>& counts() const { return counts_; }
  bool empty() const { return counts_.empty(); }

 private:
  std::map<int, std::map<int, long>> counts_;  // N_P -> N_M -> count
};

//! Writes `dir/<index>/{pocket,ligand}.xyz` and `dir/meta.json`.
void save_world(const std::filesystem::path& dir, const World& world);
//! Reads a directory written by save_world. Throws if it is missing or malformed.
World load_world(const std::filesystem::path& dir);

}  // namespace pocketrl

#endif  // POCKETRL_SYNTHWORLD_HPP
