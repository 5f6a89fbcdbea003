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

#ifndef POCKETRL_DIFFUSION_HPP
#define POCKETRL_DIFFUSION_HPP

#include <Eigen/Core>
#include <vector>

#include "pocketrl/denoiser.hpp"
#include "pocketrl/geometry.hpp"
#include "pocketrl/rng.hpp"
#include "pocketrl/schedule.hpp"

namespace pocketrl {

//! Noisy ligand z_t at step t. Coordinates live in the centroid-free
//! subspace. The pocket is held by the caller and shared across states.
struct NoisyState {
  LigandCloud z;
  int t = 0;
};

//! One policy step t -> s: the state, the sampled z_s, and its log-density
//! under the parameters used for sampling.
struct TransitionRecord {
  NoisyState state;
  LigandCloud action;
  double logp = 0.0;
  int s = 0;
};

struct ForwardSample {
  NoisyState state;
  LigandCloud eps;  // coordinate part centroid-free
};

//! z_t = alpha_t m + sigma_t eps with centroid-free coordinate noise.
ForwardSample forward_sample(const Schedule& sched, const LigandCloud& ligand, int t, Rng& rng);
NoisyState noise_to(const Schedule& sched, const LigandCloud& ligand, int t, Rng& rng);
//! The t = 0 convention: the clean ligand itself.
NoisyState clean_state(const LigandCloud& ligand);

//! m_hat = (z_t - sigma_t eps_hat) / alpha_t with feature channels clamped
//! to [0, kFeatureScale]; coordinates are not clamped.
LigandCloud predict_clean(const Schedule& sched, const LigandCloud& z_t, const DenoiserOutput& eps_hat, int t);

//! mu = coef_zt z_t + coef_m m_hat for the transition state.t -> s.
LigandCloud reverse_mean(const Schedule& sched, const DenoiserParams& params, const PocketCloud& pocket,
                         const NoisyState& state, int s);

//! Samples z_s ~ N(mu, sigma_q^2 I) (centroid-free coordinate noise). When
//! `score` is non-null, d log p(z_s) / d params is added to it.
TransitionRecord sample_transition(const Schedule& sched, const DenoiserParams& params, const PocketCloud& pocket,
                                   const NoisyState& state, int s, Rng& rng, Eigen::VectorXd* score = nullptr);

//! Isotropic Gaussian log-density of `x` around `mean`. With
//! `centroid_free_dims` the coordinate block counts 3(N-1) dimensions,
//! otherwise 3N. Quadratic terms are identical in both conventions.
double gaussian_log_density(const LigandCloud& x, const LigandCloud& mean, double sigma, bool centroid_free_dims = false);

//! log p_params(record.action | record.state) using the 3N convention.
double logp_under(const DenoiserParams& params, const PocketCloud& pocket, const TransitionRecord& record,
                  const Schedule& sched);
//! Same, adding weight * d logp / d params to `grad`.
double logp_and_gradient(const DenoiserParams& params, const PocketCloud& pocket, const TransitionRecord& record,
                         const Schedule& sched, double weight, Eigen::Ref<Eigen::VectorXd> grad);

//! epsilon-matching loss ||eps - eps_hat||^2 averaged over atoms and channels
//! at t ~ U{1..T}. The complex must already be centered on the ligand.
double pretrain_loss(const Schedule& sched, const DenoiserParams& params, const LigandCloud& ligand,
                     const PocketCloud& pocket, Rng& rng);
//! Same, adding weight * d loss / d params to `grad`.
double pretrain_loss_and_gradient(const Schedule& sched, const DenoiserParams& params, const LigandCloud& ligand,
                                  const PocketCloud& pocket, Rng& rng, double weight,
                                  Eigen::Ref<Eigen::VectorXd> grad);

//! z_T: standard normal features, centroid-free standard normal coordinates.
NoisyState sample_prior(const Schedule& sched, int n_atoms, Rng& rng);

//! Features -> one-hot(argmax) * kFeatureScale; ties go to the lowest type.
LigandCloud decode(const LigandCloud& z0);

//! Full reverse process from the prior over coarse_grid(T, stride). When
//! `records` is non-null every transition is appended to it.
LigandCloud generate(const Schedule& sched, const DenoiserParams& params, const PocketCloud& pocket, int n_atoms,
                     int stride, Rng& rng, std::vector<TransitionRecord>* records = nullptr,
                     Eigen::VectorXd* score = nullptr);

}  // namespace pocketrl

#endif  // POCKETRL_DIFFUSION_HPP
