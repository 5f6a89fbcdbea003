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


#ifndef POCKETRL_RL_HPP
#define POCKETRL_RL_HPP

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "pocketrl/denoiser.hpp"
#include "pocketrl/diffusion.hpp"
#include "pocketrl/rewards.hpp"
#include "pocketrl/schedule.hpp"
#include "pocketrl/synthworld.hpp"

namespace pocketrl {

struct PpoConfig {
  double clip_eps      = 0.2;
  double learning_rate = 1e-5;
  double weight_decay  = 1e-4;
  int batch_size       = 32;
  int n_updates        = 100;
  int stride           = 5;
  int epochs_per_batch = 1;
  int checkpoint_every = 25;
  //! Cycle over all supplied pockets instead of using only the first.
  bool round_robin     = false;

  void validate(int T) const;
  bool operator==(const PpoConfig&) const = default;
};

struct AdamConfig {
  double learning_rate = 1e-5;
  double weight_decay  = 1e-4;
  double beta1         = 0.9;
  double beta2         = 0.999;
  double eps           = 1e-8;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t step = 0;

  static AdamState zeros(Eigen::Index n) { return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), 0}; }
  bool operator==(const AdamState& o) const { return step == o.step && m == o.m && v == o.v; }
};

//! One AdamW step minimizing along `gradient`:
//!   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps) - lr * wd * theta.
//! Returns false (and leaves everything unchanged) on a non-finite gradient.
bool update_step(Eigen::Ref<Eigen::VectorXd> params, AdamState& state, const Eigen::VectorXd& gradient,
                 const AdamConfig& cfg);

struct Trajectory {
  std::vector<TransitionRecord> transitions;
  LigandCloud ligand;
  OracleVector oracle;
  bool oracle_failed = false;
  //! Sum over transitions of d logp / d params at sampling time (only when
  //! requested from rollout).
  Eigen::VectorXd score;
};

struct RolloutBatch {
  std::vector<Trajectory> trajectories;
  int stride = 0;
};

//! Rollout stream reserved for evaluation sampling; fine-tuning iteration k
//! uses stream k, so evaluation draws never coincide with training batches.
inline constexpr std::uint64_t kEvaluationStream = std::uint64_t{1} << 40;

//! Samples cfg.batch_size trajectories on coarse_grid(T, stride). Trajectory i
//! draws from Rng(Rng::derive(seed, stream, i)), so results do not depend on
//! the worker count. Ligand sizes come from `sizes`.
RolloutBatch rollout(const DenoiserParams& params, const PocketCloud& pocket, const Schedule& sched,
                     const SizeSampler& sizes, int batch_size, int stride, std::uint64_t seed, std::uint64_t stream,
                     const Eigen::VectorXd& target_histogram, bool with_score = false);

//! (r - mean) / population std; all zeros when std <= kStdGuard. Throws for
//! fewer than 2 rewards.
Eigen::VectorXd group_advantages(const Eigen::VectorXd& rewards);

//! Clipped surrogate term min(w A, clip(w, 1-eps, 1+eps) A).
double clipped_term(double ratio, double advantage, double clip_eps);
//! d clipped_term / d ratio (0 on the clipped branch).
double clipped_term_slope(double ratio, double advantage, double clip_eps);

inline constexpr double kLogRatioClamp = 20.0;

//! Mean clipped surrogate over all trajectories and transitions, a quantity
//! to maximize. When `grad` is non-null its gradient is added to it.
double ppo_loss(const DenoiserParams& params, const PocketCloud& pocket, const RolloutBatch& batch,
                const Eigen::VectorXd& advantages, double clip_eps, const Schedule& sched,
                Eigen::VectorXd* grad = nullptr);

//! Gradient of ppo_loss at params == sampling params, built from the
//! rollout scores: sum_i A_i score_i / (#transitions).
Eigen::VectorXd ppo_gradient_at_old(const RolloutBatch& batch, const Eigen::VectorXd& advantages);

struct HistoryRow {
  int iteration = 0;
  double affinity_mean = 0, affinity_std = 0;
  double qed_mean = 0, qed_std = 0;
  double sa_mean = 0, sa_std = 0;
  double composite_mean = 0;
  double invalid_rate   = 0;
  bool updated          = false;
};

struct PoolEntry {
  int iteration = 0;
  int index     = 0;
  LigandCloud ligand;
  OracleVector oracle;
};

struct FinetuneResult {
  DenoiserParams params;
  AdamState adam;
  std::vector<HistoryRow> history;
  std::vector<PoolEntry> pool;
};

struct FinetuneCallbacks {
  //! Called after each iteration's update; `iteration` counts completed updates.
  std::function<void(const HistoryRow&)> on_iteration;
  std::function<void(int iteration, const DenoiserParams&, const AdamState&)> on_checkpoint;
};

//! Rollout -> oracles -> rank transform -> composite (penalty for invalid)
//! -> group advantages -> epochs_per_batch PPO ascent passes -> AdamW, for
//! cfg.n_updates iterations. Every decoded ligand whose oracles evaluated is
//! appended to the pool.
FinetuneResult finetune(const std::vector<PocketCloud>& pockets, const DenoiserParams& init, const PpoConfig& cfg,
                        const Schedule& sched, const SizeSampler& sizes, const OracleRegistry& registry,
                        const RewardConfig& reward_cfg, const Eigen::VectorXd& target_histogram, std::uint64_t seed,
                        const FinetuneCallbacks& callbacks = {});

//! Valid pool entries sorted by topn score (descending, stable), first n.
std::vector<PoolEntry> topn_harvest(const std::vector<PoolEntry>& pool, int n);

struct PretrainConfig {
  int steps            = 5000;
  int batch_size       = 8;
  double learning_rate = 1e-3;
  double weight_decay  = 0.0;

  void validate() const;
  bool operator==(const PretrainConfig&) const = default;
};

struct PretrainResult {
  DenoiserParams params;
  AdamState adam;
  std::vector<double> losses;  // batch-mean loss per step
};

//! epsilon-matching training over the complexes (each centered on its
//! ligand). Step k draws complex indices and noise from
//! Rng(Rng::derive(seed, k, slot)).
PretrainResult pretrain(const std::vector<Complex>& complexes, const DenoiserParams& init,
                        const PretrainConfig& cfg, const Schedule& sched, std::uint64_t seed,
                        const std::function<void(int step, double loss)>& on_step = {});

//! Summary statistics over a set of oracle vectors (all ligands).
HistoryRow summarize(const std::vector<OracleVector>& oracles);

}  // namespace pocketrl

#endif  // POCKETRL_RL_HPP
