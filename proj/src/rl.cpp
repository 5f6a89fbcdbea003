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


#include "pocketrl/rl.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>
#include <string>

#include "pocketrl/parallel.hpp"

namespace pocketrl {

void PpoConfig::validate(int T) const {
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) {
    throw std::invalid_argument("PpoConfig: clip_eps must lie in (0, 1)");
  }
  if (!(learning_rate >= 0.0) || !(weight_decay >= 0.0)) {
    throw std::invalid_argument("PpoConfig: learning_rate and weight_decay must be non-negative");
  }
  if (batch_size < 2) {
    throw std::invalid_argument("PpoConfig: batch_size must be at least 2");
  }
  if (n_updates < 0 || epochs_per_batch < 1 || checkpoint_every < 1) {
    throw std::invalid_argument("PpoConfig: n_updates >= 0, epochs_per_batch >= 1, checkpoint_every >= 1");
  }
  if (stride < 1 || stride > T) {
    throw std::invalid_argument("PpoConfig: stride must lie in [1, T]");
  }
}

bool update_step(Eigen::Ref<Eigen::VectorXd> params, AdamState& state, const Eigen::VectorXd& gradient,
                 const AdamConfig& cfg) {
  if (gradient.size() != params.size()) {
    throw std::invalid_argument("update_step: gradient size does not match parameters");
  }
  if (!gradient.allFinite()) {
    std::clog << "warning: non-finite gradient, update skipped\n";
    return false;
  }
  if (state.m.size() != params.size()) {
    state = AdamState::zeros(params.size());
  }
  ++state.step;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * gradient;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * gradient.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  const Eigen::ArrayXd step = (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + cfg.eps);
  params = params.array() - cfg.learning_rate * step - cfg.learning_rate * cfg.weight_decay * params.array();
  return true;
}

RolloutBatch rollout(const DenoiserParams& params, const PocketCloud& pocket, const Schedule& sched,
                     const SizeSampler& sizes, int batch_size, int stride, std::uint64_t seed, std::uint64_t stream,
                     const Eigen::VectorXd& target_histogram, bool with_score) {
  if (batch_size < 1) {
    throw std::invalid_argument("rollout: batch_size must be positive");
  }
  pocket.validate();
  RolloutBatch batch;
  batch.stride = stride;
  batch.trajectories.resize(batch_size);
  parallel_for(batch_size, [&](int i) {
    Trajectory& traj = batch.trajectories[i];
    Rng rng(Rng::derive(seed, stream, static_cast<std::uint64_t>(i)));
    const int n_atoms = sizes.sample(pocket.size(), rng);
    if (with_score) {
      traj.score = Eigen::VectorXd::Zero(params.size());
    }
    traj.ligand = generate(sched, params, pocket, n_atoms, stride, rng, &traj.transitions,
                           with_score ? &traj.score : nullptr);
    try {
      traj.oracle = evaluate_oracles(traj.ligand, pocket, target_histogram);
    } catch (const std::exception&) {
      traj.oracle_failed = true;
      traj.oracle.valid  = false;
    }
  });
  return batch;
}

Eigen::VectorXd group_advantages(const Eigen::VectorXd& rewards) {
  if (rewards.size() < 2) {
    throw std::invalid_argument("group_advantages: need at least two rewards");
  }
  if (!rewards.allFinite()) {
    throw std::invalid_argument("group_advantages: non-finite reward");
  }
  const double mean = rewards.mean();
  const double sd   = std::sqrt((rewards.array() - mean).square().mean());
  // The guard is a threshold rather than an additive term so that
  // non-degenerate batches are normalized exactly (unit std, affine invariant).
  if (sd <= kStdGuard) {
    return Eigen::VectorXd::Zero(rewards.size());
  }
  return (rewards.array() - mean) / sd;
}

double clipped_term(double ratio, double advantage, double clip_eps) {
  const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
  return std::min(ratio * advantage, clipped * advantage);
}

double clipped_term_slope(double ratio, double advantage, double clip_eps) {
  if ((advantage >= 0.0 && ratio > 1.0 + clip_eps) || (advantage < 0.0 && ratio < 1.0 - clip_eps)) {
    return 0.0;
  }
  return advantage;
}

namespace {

std::size_t transition_count(const RolloutBatch& batch) {
  std::size_t count = 0;
  for (const auto& traj : batch.trajectories) {
    count += traj.transitions.size();
  }
  return count;
}

}  // namespace

double ppo_loss(const DenoiserParams& params, const PocketCloud& pocket, const RolloutBatch& batch,
                const Eigen::VectorXd& advantages, double clip_eps, const Schedule& sched, Eigen::VectorXd* grad) {
  const int n = static_cast<int>(batch.trajectories.size());
  if (advantages.size() != n) {
    throw std::invalid_argument("ppo_loss: one advantage per trajectory required");
  }
  const std::size_t count = transition_count(batch);
  if (count == 0) {
    throw std::invalid_argument("ppo_loss: empty batch");
  }
  std::vector<double> sums(n, 0.0);
  std::vector<Eigen::VectorXd> grads(grad ? n : 0);
  parallel_for(n, [&](int i) {
    const double adv = advantages(i);
    if (grad) {
      grads[i] = Eigen::VectorXd::Zero(params.size());
    }
    for (const auto& rec : batch.trajectories[i].transitions) {
      const double raw_log_ratio = logp_under(params, pocket, rec, sched) - rec.logp;
      const double log_ratio     = std::clamp(raw_log_ratio, -kLogRatioClamp, kLogRatioClamp);
      const double ratio         = std::exp(log_ratio);
      sums[i] += clipped_term(ratio, adv, clip_eps);
      if (grad && log_ratio == raw_log_ratio) {
        const double slope = clipped_term_slope(ratio, adv, clip_eps);
        if (slope != 0.0) {
          logp_and_gradient(params, pocket, rec, sched, slope * ratio / static_cast<double>(count), grads[i]);
        }
      }
    }
  });
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    total += sums[i];
    if (grad) {
      *grad += grads[i];
    }
  }
  const double loss = total / static_cast<double>(count);
  if (!std::isfinite(loss)) {
    throw std::runtime_error("ppo_loss: non-finite objective");
  }
  return loss;
}

Eigen::VectorXd ppo_gradient_at_old(const RolloutBatch& batch, const Eigen::VectorXd& advantages) {
  const int n = static_cast<int>(batch.trajectories.size());
  if (advantages.size() != n || n == 0) {
    throw std::invalid_argument("ppo_gradient_at_old: one advantage per trajectory required");
  }
  const std::size_t count = transition_count(batch);
  Eigen::VectorXd grad    = Eigen::VectorXd::Zero(batch.trajectories.front().score.size());
  for (int i = 0; i < n; ++i) {
    const auto& score = batch.trajectories[i].score;
    if (score.size() != grad.size()) {
      throw std::invalid_argument("ppo_gradient_at_old: rollout was sampled without scores");
    }
    grad += advantages(i) * score;
  }
  return grad / static_cast<double>(count);
}

HistoryRow summarize(const std::vector<OracleVector>& oracles) {
  HistoryRow row;
  const Eigen::Index n = static_cast<Eigen::Index>(oracles.size());
  if (n == 0) {
    return row;
  }
  Eigen::VectorXd aff(n), qed(n), sa(n);
  int invalid = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    aff(i) = oracles[i].affinity;
    qed(i) = oracles[i].qed_like;
    sa(i)  = oracles[i].sa_like;
    invalid += oracles[i].valid ? 0 : 1;
  }
  auto stats = [](const Eigen::VectorXd& v, double& mean, double& sd) {
    mean = v.mean();
    sd   = std::sqrt((v.array() - mean).square().mean());
  };
  stats(aff, row.affinity_mean, row.affinity_std);
  stats(qed, row.qed_mean, row.qed_std);
  stats(sa, row.sa_mean, row.sa_std);
  row.invalid_rate = static_cast<double>(invalid) / static_cast<double>(n);
  return row;
}

FinetuneResult finetune(const std::vector<PocketCloud>& pockets, const DenoiserParams& init, const PpoConfig& cfg,
                        const Schedule& sched, const SizeSampler& sizes, const OracleRegistry& registry,
                        const RewardConfig& reward_cfg, const Eigen::VectorXd& target_histogram, std::uint64_t seed,
                        const FinetuneCallbacks& callbacks) {
  cfg.validate(sched.T());
  if (pockets.empty()) {
    throw std::invalid_argument("finetune: no pocket given");
  }
  FinetuneResult result{init, AdamState::zeros(init.size()), {}, {}};
  AdamConfig adam;
  adam.learning_rate = cfg.learning_rate;
  adam.weight_decay  = cfg.weight_decay;

  for (int it = 0; it < cfg.n_updates; ++it) {
    const PocketCloud& pocket =
        cfg.round_robin ? pockets[static_cast<std::size_t>(it) % pockets.size()] : pockets.front();
    const RolloutBatch batch = rollout(result.params, pocket, sched, sizes, cfg.batch_size, cfg.stride, seed,
                                       static_cast<std::uint64_t>(it), target_histogram, true);
    std::vector<LigandCloud> ligands;
    std::vector<OracleVector> oracles;
    for (const auto& traj : batch.trajectories) {
      ligands.push_back(traj.ligand);
      oracles.push_back(traj.oracle);
    }
    const RewardBatch rewards = score_batch(ligands, oracles, pocket, registry, reward_cfg);

    HistoryRow row     = summarize(rewards.oracles);
    row.iteration      = it;
    row.composite_mean = rewards.composite.mean();
    for (int i = 0; i < cfg.batch_size; ++i) {
      if (!batch.trajectories[i].oracle_failed) {
        result.pool.push_back({it, i, ligands[i], rewards.oracles[i]});
      }
    }

    if (rewards.n_valid == 0) {
      std::clog << "iteration " << it << ": no valid ligand in batch, update skipped\n";
    } else {
      const Eigen::VectorXd adv = group_advantages(rewards.composite);
      // First pass: params equal the sampling params, so the surrogate
      // gradient is the advantage-weighted score collected during rollout.
      Eigen::VectorXd grad = ppo_gradient_at_old(batch, adv);
      row.updated          = update_step(result.params.values(), result.adam, -grad, adam);
      for (int epoch = 1; epoch < cfg.epochs_per_batch; ++epoch) {
        grad.setZero();
        ppo_loss(result.params, pocket, batch, adv, cfg.clip_eps, sched, &grad);
        update_step(result.params.values(), result.adam, -grad, adam);
      }
    }
    result.history.push_back(row);
    if (callbacks.on_iteration) {
      callbacks.on_iteration(row);
    }
    if (callbacks.on_checkpoint && (it + 1) % cfg.checkpoint_every == 0) {
      callbacks.on_checkpoint(it + 1, result.params, result.adam);
    }
  }
  return result;
}

void PretrainConfig::validate() const {
  if (steps < 0 || batch_size < 1 || !(learning_rate >= 0.0) || !(weight_decay >= 0.0)) {
    throw std::invalid_argument("PretrainConfig: steps >= 0, batch_size >= 1, non-negative rates required");
  }
}

PretrainResult pretrain(const std::vector<Complex>& complexes, const DenoiserParams& init,
                        const PretrainConfig& cfg, const Schedule& sched, std::uint64_t seed,
                        const std::function<void(int step, double loss)>& on_step) {
  cfg.validate();
  if (complexes.empty()) {
    throw std::invalid_argument("pretrain: no training complexes");
  }
  std::vector<Complex> centered;
  for (const auto& c : complexes) {
    auto [pocket, ligand] = center_on_ligand(c.pocket, c.ligand);
    centered.push_back({std::move(pocket), std::move(ligand)});
  }
  PretrainResult result{init, AdamState::zeros(init.size()), {}};
  AdamConfig adam;
  adam.learning_rate = cfg.learning_rate;
  adam.weight_decay  = cfg.weight_decay;
  const int n_complex = static_cast<int>(centered.size());
  std::vector<double> losses(cfg.batch_size);
  std::vector<Eigen::VectorXd> grads(cfg.batch_size);
  for (int step = 0; step < cfg.steps; ++step) {
    parallel_for(cfg.batch_size, [&](int b) {
      Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(step), static_cast<std::uint64_t>(b)));
      const Complex& c = centered[rng.uniform_int(0, n_complex - 1)];
      grads[b]         = Eigen::VectorXd::Zero(init.size());
      losses[b] = pretrain_loss_and_gradient(sched, result.params, c.ligand, c.pocket, rng,
                                             1.0 / cfg.batch_size, grads[b]);
    });
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(init.size());
    double loss          = 0.0;
    for (int b = 0; b < cfg.batch_size; ++b) {
      grad += grads[b];
      loss += losses[b];
    }
    loss /= cfg.batch_size;
    update_step(result.params.values(), result.adam, grad, adam);
    result.losses.push_back(loss);
    if (on_step) {
      on_step(step, loss);
    }
  }
  return result;
}

std::vector<PoolEntry> topn_harvest(const std::vector<PoolEntry>& pool, int n) {
  if (n < 0) {
    throw std::invalid_argument("topn_harvest: n must be non-negative");
  }
  std::vector<const PoolEntry*> valid;
  for (const auto& entry : pool) {
    if (entry.oracle.valid) {
      valid.push_back(&entry);
    }
  }
  const Eigen::Index m = static_cast<Eigen::Index>(valid.size());
  Eigen::VectorXd aff(m), qed(m), sa(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    aff(i) = valid[i]->oracle.affinity;
    qed(i) = valid[i]->oracle.qed_like;
    sa(i)  = valid[i]->oracle.sa_like;
  }
  const Eigen::VectorXd z = topn_scores(aff, qed, sa);
  std::vector<Eigen::Index> order(m);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&z](Eigen::Index a, Eigen::Index b) { return z(a) > z(b); });
  std::vector<PoolEntry> out;
  for (Eigen::Index k = 0; k < std::min<Eigen::Index>(m, n); ++k) {
    out.push_back(*valid[order[k]]);
  }
  return out;
}

}  // namespace pocketrl
