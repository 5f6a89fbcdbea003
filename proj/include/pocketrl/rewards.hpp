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


#ifndef POCKETRL_REWARDS_HPP
#define POCKETRL_REWARDS_HPP

#include <Eigen/Core>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "pocketrl/geometry.hpp"

namespace pocketrl {

//! Pair terms beyond this distance are truncated to zero.
inline constexpr double kAffinityCutoff = 8.0;
//! Contact distance for the type-compatibility bonus.
inline constexpr double kContactDistance = 1.5;
inline constexpr double kContactBonus    = -0.5;
//! Bond cutoff of the connectivity graph and minimum allowed separation.
inline constexpr double kBondCutoff   = 1.6;
inline constexpr double kMinSeparation = 0.8;
//! Ligand size at which the qed-like size term is neutral.
inline constexpr int kTargetLigandSize = 11;
inline constexpr int kDistanceBins     = 16;
inline constexpr double kDistanceRange = 8.0;
inline constexpr int kDescriptorSize   = kLigandTypes + kDistanceBins;
//! Penalty when a batch has no valid ligand.
inline constexpr double kNoValidPenalty = -3.0;
//! Guard added to standard deviations used as denominators.
inline constexpr double kStdGuard = 1e-8;

double oracle_affinity(const LigandCloud& ligand, const PocketCloud& pocket);
//! `target` is the world composition histogram (kLigandTypes entries).
double oracle_qed_like(const LigandCloud& ligand, const Eigen::VectorXd& target);
double oracle_sa_like(const LigandCloud& ligand);
bool oracle_validity(const LigandCloud& ligand);
//! Largest connected component under kBondCutoff as a fraction of atoms.
double connected_fraction(const LigandCloud& ligand);
//! Normalized type histogram followed by a normalized pairwise-distance histogram.
Eigen::VectorXd descriptor(const LigandCloud& ligand);

enum class Direction { kMaximize, kMinimize };

//! Per-ligand objective. Implementations must be pure and thread-safe.
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual double evaluate(const LigandCloud& ligand, const PocketCloud& pocket) const = 0;
  virtual Direction direction() const = 0;
};

//! Adapts a callable to the Oracle interface.
class FunctionOracle final : public Oracle {
 public:
  using Fn = std::function<double(const LigandCloud&, const PocketCloud&)>;
  FunctionOracle(Fn fn, Direction dir) : fn_(std::move(fn)), dir_(dir) {}
  double evaluate(const LigandCloud& ligand, const PocketCloud& pocket) const override { return fn_(ligand, pocket); }
  Direction direction() const override { return dir_; }

 private:
  Fn fn_;
  Direction dir_;
};

//! Name -> oracle. "diversity" is reserved for the batch-level objective.
class OracleRegistry {
 public:
  //! "affinity" (minimize), "qed" and "sa" (maximize).
  static OracleRegistry with_defaults(const Eigen::VectorXd& target_histogram);

  void add(const std::string& name, std::shared_ptr<const Oracle> oracle);
  const Oracle& get(const std::string& name) const;
  bool contains(const std::string& name) const { return oracles_.count(name) != 0; }
  std::vector<std::string> names() const;

 private:
  std::map<std::string, std::shared_ptr<const Oracle>> oracles_;
};

inline const std::string kDiversityObjective = "diversity";

enum class DiversityMode { kCosine, kTanimoto };

struct RewardConfig {
  std::map<std::string, double> weights{{"qed", 0.2}, {"sa", 0.2}, {"affinity", 0.5}, {kDiversityObjective, 0.1}};
  DiversityMode diversity_mode = DiversityMode::kCosine;

  bool operator==(const RewardConfig&) const = default;
};

struct OracleVector {
  double affinity = 0.0;
  double qed_like = 0.0;
  double sa_like  = 0.0;
  bool valid      = false;
  Eigen::VectorXd descriptor;
};

//! All built-in oracles for one ligand. Non-finite oracle values mark the
//! ligand invalid.
OracleVector evaluate_oracles(const LigandCloud& ligand, const PocketCloud& pocket,
                              const Eigen::VectorXd& target_histogram);

//! Average ranks (1-based, ties share the mean rank) mapped to
//! Phi^-1((rank - 0.5) / n).
Eigen::VectorXd gaussian_rank_transform(const Eigen::VectorXd& values);

//! score_i = 1 - mean_{j != i} similarity(d_i, d_j); a batch of one scores 0.
Eigen::VectorXd diversity_scores(const std::vector<Eigen::VectorXd>& descriptors,
                                 DiversityMode mode = DiversityMode::kCosine);

//! Weighted sum of rank-transformed objective columns.
Eigen::VectorXd composite_reward(const Eigen::MatrixXd& transformed, const Eigen::VectorXd& weights);

//! mu_B - 3 sigma_B (population sigma) of the valid composite rewards;
//! kNoValidPenalty for an empty input.
double invalid_penalty(const Eigen::VectorXd& valid_rewards);

struct RewardBatch {
  std::vector<OracleVector> oracles;
  std::vector<std::string> objectives;  // column order of raw / transformed
  Eigen::MatrixXd raw;                  // all ligands, objective as evaluated
  Eigen::MatrixXd transformed;          // valid rows only carry meaning; invalid rows are 0
  Eigen::VectorXd diversity;            // 0 for invalid ligands
  Eigen::VectorXd composite;
  Eigen::VectorXd advantages;
  double penalty = 0.0;
  int n_valid    = 0;
};

//! Scores a batch: per-objective raw values, direction-aware rank transform
//! over valid ligands, diversity among valid ligands, weighted composite, and
//! the invalid penalty. `oracles` supplies validity and descriptors.
//! Advantages are left empty.
RewardBatch score_batch(const std::vector<LigandCloud>& ligands, const std::vector<OracleVector>& oracles,
                        const PocketCloud& pocket, const OracleRegistry& registry, const RewardConfig& cfg);

//! z = 5 norm(|affinity|) + norm(qed) + 1.5 norm(sa), z-scores over the given values.
Eigen::VectorXd topn_scores(const Eigen::VectorXd& affinity, const Eigen::VectorXd& qed, const Eigen::VectorXd& sa);

//! Z-score with population sigma and kStdGuard.
Eigen::VectorXd zscore(const Eigen::VectorXd& values);

}  // namespace pocketrl

#endif  // POCKETRL_REWARDS_HPP
