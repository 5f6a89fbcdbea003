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

#include "pocketrl/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pocketrl {

namespace {

void check_step(const Schedule& sched, int t) {
  if (t < 1 || t > sched.T()) {
    throw std::invalid_argument("diffusion step must lie in [1, T]");
  }
}

LigandCloud gaussian_like(int n_atoms, int n_features, Rng& rng) {
  LigandCloud out;
  out.coords.resize(n_atoms, 3);
  out.features.resize(n_atoms, n_features);
  rng.fill_normal(out.coords);
  rng.fill_normal(out.features);
  out.coords = project_com_free(out.coords);
  return out;
}

// Everything a transition needs to compute mu and its parameter gradient.
struct MeanEval {
  LigandCloud mean;
  Eigen::MatrixXd feature_mask;  // 1 where the feature clamp is inactive
  PosteriorParams post;
};

MeanEval transition_mean(const Schedule& sched, const DenoiserParams& params, const PocketCloud& pocket,
                         const NoisyState& state, int s, DenoiserTape* tape) {
  const int t = state.t;
  check_step(sched, t);
  MeanEval out;
  out.post = posterior_params(sched, s, t);
  const DenoiserOutput eps = forward(params, state.z, pocket, t, sched.T(), tape);
  const double alpha = sched.alpha(t), sigma = sched.sigma(t);
  const Eigen::MatrixXd raw_feat = (state.z.features - sigma * eps.eps_feat) / alpha;
  LigandCloud m_hat;
  m_hat.coords   = (state.z.coords - sigma * eps.eps_coord) / alpha;
  m_hat.features = raw_feat.cwiseMax(0.0).cwiseMin(kFeatureScale);
  out.feature_mask = ((raw_feat.array() > 0.0) && (raw_feat.array() < kFeatureScale)).cast<double>().matrix();
  out.mean.coords   = out.post.coef_zt * state.z.coords + out.post.coef_m * m_hat.coords;
  out.mean.features = out.post.coef_zt * state.z.features + out.post.coef_m * m_hat.features;
  if (!out.mean.coords.allFinite() || !out.mean.features.allFinite()) {
    throw std::runtime_error("reverse transition mean is not finite");
  }
  return out;
}

// Adds weight * d log N(action; mu, sigma_q^2) / d params.
void accumulate_logp_gradient(const Schedule& sched, const DenoiserParams& params, const DenoiserTape& tape,
                              const MeanEval& eval, const LigandCloud& action, int t, double weight,
                              Eigen::Ref<Eigen::VectorXd> grad) {
  const double var   = eval.post.sigma_q * eval.post.sigma_q;
  // d mu / d eps_hat = -coef_m * sigma_t / alpha_t (times the clamp mask on features).
  const double chain = -eval.post.coef_m * sched.sigma(t) / sched.alpha(t) * weight / var;
  DenoiserOutput upstream;
  upstream.eps_coord = chain * (action.coords - eval.mean.coords);
  upstream.eps_feat  = chain * (action.features - eval.mean.features).cwiseProduct(eval.feature_mask);
  backward(params, tape, upstream, grad);
}

}  // namespace

ForwardSample forward_sample(const Schedule& sched, const LigandCloud& ligand, int t, Rng& rng) {
  check_step(sched, t);
  ForwardSample out;
  out.eps           = gaussian_like(ligand.size(), ligand.feature_dim(), rng);
  out.state.t       = t;
  out.state.z.coords   = sched.alpha(t) * project_com_free(ligand.coords) + sched.sigma(t) * out.eps.coords;
  out.state.z.features = sched.alpha(t) * ligand.features + sched.sigma(t) * out.eps.features;
  return out;
}

NoisyState noise_to(const Schedule& sched, const LigandCloud& ligand, int t, Rng& rng) {
  return forward_sample(sched, ligand, t, rng).state;
}

NoisyState clean_state(const LigandCloud& ligand) { return NoisyState{ligand, 0}; }

LigandCloud predict_clean(const Schedule& sched, const LigandCloud& z_t, const DenoiserOutput& eps_hat, int t) {
  check_step(sched, t);
  const double alpha = sched.alpha(t), sigma = sched.sigma(t);
  LigandCloud out;
  out.coords   = (z_t.coords - sigma * eps_hat.eps_coord) / alpha;
  out.features = ((z_t.features - sigma * eps_hat.eps_feat) / alpha).cwiseMax(0.0).cwiseMin(kFeatureScale);
  return out;
}

LigandCloud reverse_mean(const Schedule& sched, const DenoiserParams& params, const PocketCloud& pocket,
                         const NoisyState& state, int s) {
  return transition_mean(sched, params, pocket, state, s, nullptr).mean;
}

TransitionRecord sample_transition(const Schedule& sched, const DenoiserParams& params, const PocketCloud& pocket,
                                   const NoisyState& state, int s, Rng& rng, Eigen::VectorXd* score) {
  DenoiserTape tape;
  const MeanEval eval = transition_mean(sched, params, pocket, state, s, score ? &tape : nullptr);
  const double sigma_q = eval.post.sigma_q;
  if (!(sigma_q > 0.0)) {
    throw std::runtime_error("sample_transition: degenerate transition variance");
  }
  const LigandCloud noise = gaussian_like(state.z.size(), state.z.feature_dim(), rng);
  TransitionRecord rec;
  rec.state           = state;
  rec.s               = s;
  rec.action.coords   = eval.mean.coords + sigma_q * noise.coords;
  rec.action.features = eval.mean.features + sigma_q * noise.features;
  rec.logp            = gaussian_log_density(rec.action, eval.mean, sigma_q);
  if (score) {
    accumulate_logp_gradient(sched, params, tape, eval, rec.action, state.t, 1.0, *score);
  }
  return rec;
}

double gaussian_log_density(const LigandCloud& x, const LigandCloud& mean, double sigma, bool centroid_free_dims) {
  const double var  = sigma * sigma;
  const double quad = (x.coords - mean.coords).squaredNorm() + (x.features - mean.features).squaredNorm();
  const int n       = x.size();
  const double dims = static_cast<double>(centroid_free_dims ? 3 * (n - 1) : 3 * n) +
                      static_cast<double>(n) * x.feature_dim();
  return -0.5 * quad / var - 0.5 * dims * std::log(2.0 * std::numbers::pi * var);
}

double logp_under(const DenoiserParams& params, const PocketCloud& pocket, const TransitionRecord& record,
                  const Schedule& sched) {
  const MeanEval eval = transition_mean(sched, params, pocket, record.state, record.s, nullptr);
  const double logp   = gaussian_log_density(record.action, eval.mean, eval.post.sigma_q);
  if (!std::isfinite(logp)) {
    throw std::runtime_error("logp_under: non-finite log-density");
  }
  return logp;
}

double logp_and_gradient(const DenoiserParams& params, const PocketCloud& pocket, const TransitionRecord& record,
                         const Schedule& sched, double weight, Eigen::Ref<Eigen::VectorXd> grad) {
  DenoiserTape tape;
  const MeanEval eval = transition_mean(sched, params, pocket, record.state, record.s, &tape);
  const double logp   = gaussian_log_density(record.action, eval.mean, eval.post.sigma_q);
  if (!std::isfinite(logp)) {
    throw std::runtime_error("logp_and_gradient: non-finite log-density");
  }
  accumulate_logp_gradient(sched, params, tape, eval, record.action, record.state.t, weight, grad);
  return logp;
}

namespace {

double pretrain_impl(const Schedule& sched, const DenoiserParams& params, const LigandCloud& ligand,
                     const PocketCloud& pocket, Rng& rng, double weight, Eigen::VectorXd* grad) {
  const int t            = rng.uniform_int(1, sched.T());
  const ForwardSample fs = forward_sample(sched, ligand, t, rng);
  DenoiserTape tape;
  const DenoiserOutput eps_hat = forward(params, fs.state.z, pocket, t, sched.T(), grad ? &tape : nullptr);
  const double count = static_cast<double>(ligand.size()) * (3 + ligand.feature_dim());
  const Eigen::MatrixXd dc = fs.eps.coords - eps_hat.eps_coord;
  const Eigen::MatrixXd df = fs.eps.features - eps_hat.eps_feat;
  const double loss        = (dc.squaredNorm() + df.squaredNorm()) / count;
  if (grad) {
    DenoiserOutput upstream;
    upstream.eps_coord = (-2.0 * weight / count) * dc;
    upstream.eps_feat  = (-2.0 * weight / count) * df;
    backward(params, tape, upstream, *grad);
  }
  return loss;
}

}  // namespace

double pretrain_loss(const Schedule& sched, const DenoiserParams& params, const LigandCloud& ligand,
                     const PocketCloud& pocket, Rng& rng) {
  return pretrain_impl(sched, params, ligand, pocket, rng, 0.0, nullptr);
}

double pretrain_loss_and_gradient(const Schedule& sched, const DenoiserParams& params, const LigandCloud& ligand,
                                  const PocketCloud& pocket, Rng& rng, double weight,
                                  Eigen::Ref<Eigen::VectorXd> grad) {
  Eigen::VectorXd local = Eigen::VectorXd::Zero(grad.size());
  const double loss     = pretrain_impl(sched, params, ligand, pocket, rng, weight, &local);
  grad += local;
  return loss;
}

NoisyState sample_prior(const Schedule& sched, int n_atoms, Rng& rng) {
  if (n_atoms < 1) {
    throw std::invalid_argument("sample_prior: need at least one atom");
  }
  return NoisyState{gaussian_like(n_atoms, kLigandTypes, rng), sched.T()};
}

LigandCloud decode(const LigandCloud& z0) { return make_clean_ligand(z0.coords, ligand_types(z0)); }

LigandCloud generate(const Schedule& sched, const DenoiserParams& params, const PocketCloud& pocket, int n_atoms,
                     int stride, Rng& rng, std::vector<TransitionRecord>* records, Eigen::VectorXd* score) {
  const auto grid  = coarse_grid(sched.T(), stride);
  NoisyState state = sample_prior(sched, n_atoms, rng);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    TransitionRecord rec = sample_transition(sched, params, pocket, state, grid[k], rng, score);
    state.z              = rec.action;
    state.t              = rec.s;
    if (records) {
      records->push_back(std::move(rec));
    }
  }
  return decode(state.z);
}

}  // namespace pocketrl
