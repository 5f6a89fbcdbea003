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


#include <gtest/gtest.h>

#include <numbers>

#include "pocketrl/diffusion.hpp"
#include "support.hpp"

namespace pocketrl {
namespace {

using testing::random_clean_ligand;
using testing::random_noisy_ligand;
using testing::random_pocket;

const Schedule& sched500() {
  static const Schedule s = Schedule::build(500, 1e-4);
  return s;
}

DenoiserParams perturbed(const DenoiserConfig& cfg, std::uint64_t seed, double scale = 0.3) {
  DenoiserParams p = DenoiserParams::initialize(cfg, seed);
  Rng rng(seed + 77);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    p.values()(i) += scale * rng.normal();
  }
  return p;
}

TEST(ForwardNoise, CentroidFreeAndDeterministic) {
  Rng data(1);
  const LigandCloud m = random_clean_ligand(6, data);
  Rng a(5), b(5);
  const NoisyState za = noise_to(sched500(), m, 100, a);
  const NoisyState zb = noise_to(sched500(), m, 100, b);
  EXPECT_EQ(za.z, zb.z);
  EXPECT_LT(za.z.coords.colwise().sum().cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_THROW(noise_to(sched500(), m, 0, a), std::invalid_argument);
  EXPECT_THROW(noise_to(sched500(), m, 501, a), std::invalid_argument);
  EXPECT_EQ(clean_state(m).z, m);
  EXPECT_EQ(clean_state(m).t, 0);
}

TEST(ForwardNoise, MonteCarloFeatureMoments) {
  const Schedule& s = sched500();
  const int t       = 250;
  const LigandCloud m = make_clean_ligand(Coords<double>(Coords<double>::Zero(1, 3)), {2});
  Rng rng(2);
  const int draws = 100000;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(kLigandTypes), sq = Eigen::VectorXd::Zero(kLigandTypes);
  for (int i = 0; i < draws; ++i) {
    const Eigen::VectorXd f = noise_to(s, m, t, rng).z.features.row(0).transpose();
    sum += f;
    sq += f.cwiseAbs2();
  }
  for (int k = 0; k < kLigandTypes; ++k) {
    const double mean = sum(k) / draws;
    const double var  = sq(k) / draws - mean * mean;
    EXPECT_LE(std::abs(mean - s.alpha(t) * m.features(0, k)), 3.0 * s.sigma(t) / std::sqrt(double(draws)));
    EXPECT_LE(std::abs(var / s.sigma2(t) - 1.0), 0.02);
  }
}

TEST(PredictClean, InversionAndThresholding) {
  const Schedule& s = sched500();
  Rng rng(3);
  const LigandCloud m = random_clean_ligand(4, rng);
  const ForwardSample fs = forward_sample(s, m, 40, rng);
  const LigandCloud rec  = predict_clean(s, fs.state.z, DenoiserOutput{fs.eps.coords, fs.eps.features}, 40);
  EXPECT_LT((rec.coords - project_com_free(m.coords)).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((rec.features - m.features).cwiseAbs().maxCoeff(), 1e-10);

  // With eps_hat = 0 the raw prediction is z / alpha_t.
  LigandCloud z;
  z.coords   = Coords<double>{{100.0, -50.0, 3.0}};
  z.features = Eigen::MatrixXd::Zero(1, kLigandTypes);
  z.features(0, 0) = 0.3 * s.alpha(10);
  z.features(0, 1) = -0.1 * s.alpha(10);
  z.features(0, 2) = 0.1 * s.alpha(10);
  const DenoiserOutput zero{Coords<double>::Zero(1, 3), Eigen::MatrixXd::Zero(1, kLigandTypes)};
  const LigandCloud out = predict_clean(s, z, zero, 10);
  EXPECT_DOUBLE_EQ(out.features(0, 0), 0.25);
  EXPECT_DOUBLE_EQ(out.features(0, 1), 0.0);
  EXPECT_NEAR(out.features(0, 2), 0.1, 1e-15);
  EXPECT_LT((out.coords - z.coords / s.alpha(10)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(predict_clean(s, z, zero, 0), std::invalid_argument);
}

TEST(ReverseMean, NoiselessPointWithZeroPrediction) {
  const Schedule& s = sched500();
  Rng rng(4);
  const auto params = DenoiserParams::initialize({2, 8}, 1);  // eps_hat == 0
  const PocketCloud pocket = random_pocket(5, rng);
  LigandCloud m = random_clean_ligand(5, rng);
  m.coords      = project_com_free(m.coords);
  for (auto [sp, t] : {std::pair{0, 5}, {100, 120}, {495, 500}}) {
    NoisyState st{m, t};
    st.z.coords   = s.alpha(t) * m.coords;
    st.z.features = s.alpha(t) * m.features;
    const LigandCloud mu = reverse_mean(s, params, pocket, st, sp);
    EXPECT_LT((mu.coords - s.alpha(sp) * m.coords).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((mu.features - s.alpha(sp) * m.features).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ReverseMean, CentroidFreeAndEquivariant) {
  const Schedule& s = sched500();
  Rng rng(5);
  const auto params        = perturbed({2, 16}, 2);
  const PocketCloud pocket = random_pocket(8, rng);
  const NoisyState st{random_noisy_ligand(6, rng), 300};
  const LigandCloud mu = reverse_mean(s, params, pocket, st, 295);
  EXPECT_LT(mu.coords.colwise().sum().cwiseAbs().maxCoeff(), 1e-8);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const O3Transform tf = sample_random_o3(seed);
    NoisyState sr        = st;
    PocketCloud pr       = pocket;
    sr.z.coords          = apply_o3(tf, st.z.coords);
    pr.coords            = apply_o3(tf, pocket.coords);
    const LigandCloud mr = reverse_mean(s, params, pr, sr, 295);
    EXPECT_LE((mr.coords - apply_o3(tf, mu.coords)).norm(), 1e-9 * mu.coords.norm());
    EXPECT_LE((mr.features - mu.features).norm(), 1e-9 * mu.features.norm());
  }
}

TEST(SampleTransition, RecordedLogpIsReproducible) {
  const Schedule& s = sched500();
  Rng rng(6);
  const auto params        = perturbed({2, 16}, 3);
  const PocketCloud pocket = random_pocket(7, rng);
  const NoisyState st{random_noisy_ligand(5, rng), 200};
  const TransitionRecord rec = sample_transition(s, params, pocket, st, 180, rng);
  EXPECT_EQ(rec.s, 180);
  EXPECT_TRUE(std::isfinite(rec.logp));
  EXPECT_NEAR(logp_under(params, pocket, rec, s), rec.logp, 1e-10);
  EXPECT_LT(rec.action.coords.colwise().sum().cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_THROW(sample_transition(s, params, pocket, st, 200, rng), std::invalid_argument);
}

TEST(SampleTransition, OneAtomDensityAtTheMean) {
  const Schedule& s = sched500();
  Rng rng(7);
  LigandCloud x;
  x.coords   = Coords<double>::Zero(1, 3);
  x.features = Eigen::MatrixXd::Zero(1, kLigandTypes);
  for (double sigma : {0.05, 0.3, 1.0}) {
    // A single atom has no centroid-free coordinate freedom: D = K.
    const double expected = -0.5 * kLigandTypes * std::log(2.0 * std::numbers::pi * sigma * sigma);
    EXPECT_NEAR(gaussian_log_density(x, x, sigma, true), expected, 1e-12);
    EXPECT_NEAR(gaussian_log_density(x, x, sigma, false),
                -0.5 * (3 + kLigandTypes) * std::log(2.0 * std::numbers::pi * sigma * sigma), 1e-12);
  }
  (void)s;
}

TEST(LogDensity, GradientMatchesFiniteDifferences) {
  const Schedule s = Schedule::build(100, 1e-4);
  Rng rng(8);
  const auto params        = perturbed({2, 8}, 4);
  const PocketCloud pocket = random_pocket(5, rng);
  const NoisyState st{random_noisy_ligand(3, rng), 60};
  const auto sampler = perturbed({2, 8}, 5);
  const TransitionRecord rec = sample_transition(s, sampler, pocket, st, 50, rng);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.size());
  const double lp      = logp_and_gradient(params, pocket, rec, s, 1.0, grad);
  EXPECT_NEAR(lp, logp_under(params, pocket, rec, s), 1e-12);
  const double h = 1e-5;
  for (int k = 0; k < 20; ++k) {
    Eigen::VectorXd dir(params.size());
    rng.fill_normal(dir);
    dir.normalize();
    DenoiserParams plus = params, minus = params;
    plus.values() += h * dir;
    minus.values() -= h * dir;
    const double fd = (logp_under(plus, pocket, rec, s) - logp_under(minus, pocket, rec, s)) / (2 * h);
    EXPECT_LE(std::abs(fd - grad.dot(dir)), 1e-4 * std::max(1.0, std::abs(fd)));
  }
  // The score from sample_transition equals the gradient at the sampling params.
  Rng r1(9), r2(9);
  Eigen::VectorXd score = Eigen::VectorXd::Zero(params.size());
  const TransitionRecord a = sample_transition(s, params, pocket, st, 50, r1, &score);
  const TransitionRecord b = sample_transition(s, params, pocket, st, 50, r2);
  EXPECT_EQ(a.action, b.action);
  Eigen::VectorXd direct = Eigen::VectorXd::Zero(params.size());
  logp_and_gradient(params, pocket, b, s, 1.0, direct);
  EXPECT_LE((score - direct).norm(), 1e-10 * std::max(1.0, direct.norm()));
}

TEST(LogDensity, JointO3Invariance) {
  const Schedule& s = sched500();
  Rng rng(10);
  const auto params        = perturbed({3, 16}, 6);
  const PocketCloud pocket = random_pocket(10, rng);
  const NoisyState st{random_noisy_ligand(6, rng), 120};
  const TransitionRecord rec = sample_transition(s, params, pocket, st, 115, rng);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const O3Transform tf = sample_random_o3(seed);
    TransitionRecord r   = rec;
    PocketCloud p        = pocket;
    r.state.z.coords     = apply_o3(tf, rec.state.z.coords);
    r.action.coords      = apply_o3(tf, rec.action.coords);
    p.coords             = apply_o3(tf, pocket.coords);
    EXPECT_LE(testing::rel_error(logp_under(params, p, r, s), rec.logp), 1e-6);
  }
}

TEST(Pretraining, UntrainedLossIsUnitAndGradientConsistent) {
  const Schedule& s = sched500();
  Rng data(11);
  const auto params        = DenoiserParams::initialize({2, 8}, 7);
  const PocketCloud pocket = random_pocket(8, data);
  LigandCloud m            = random_clean_ligand(9, data);
  m.coords                 = project_com_free(m.coords);
  double total = 0.0;
  const int reps = 2000;
  for (int k = 0; k < reps; ++k) {
    Rng rng(1000 + k);
    total += pretrain_loss(s, params, m, pocket, rng);
  }
  // Coordinate noise lives in 3(N-1) dimensions: expected (3(N-1)/N + K) / (3 + K).
  const double expected = (3.0 * 8.0 / 9.0 + kLigandTypes) / (3.0 + kLigandTypes);
  EXPECT_NEAR(total / reps, expected, 0.1 * expected);
  EXPECT_NEAR(total / reps, 1.0, 0.1);

  const auto trained = perturbed({2, 8}, 8);
  Rng a(3), b(3);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(trained.size());
  const double l1 = pretrain_loss_and_gradient(s, trained, m, pocket, a, 1.0, grad);
  EXPECT_EQ(l1, pretrain_loss(s, trained, m, pocket, b));
  Rng dir_rng(4);
  Eigen::VectorXd dir(trained.size());
  dir_rng.fill_normal(dir);
  dir.normalize();
  DenoiserParams plus = trained, minus = trained;
  plus.values() += 1e-5 * dir;
  minus.values() -= 1e-5 * dir;
  Rng p1(3), p2(3);
  const double fd = (pretrain_loss(s, plus, m, pocket, p1) - pretrain_loss(s, minus, m, pocket, p2)) / 2e-5;
  EXPECT_LE(std::abs(fd - grad.dot(dir)), 1e-4 * std::max(1.0, std::abs(fd)));
}

TEST(Prior, CentroidFreeMoments) {
  const Schedule& s = sched500();
  Rng rng(12);
  const int n = 4, draws = 100000;
  double sq   = 0.0;
  for (int k = 0; k < draws; ++k) {
    const NoisyState z = sample_prior(s, n, rng);
    EXPECT_EQ(z.t, 500);
    ASSERT_LT(z.z.coords.colwise().sum().cwiseAbs().maxCoeff(), 1e-12);
    sq += z.z.coords(0, 0) * z.z.coords(0, 0);
  }
  EXPECT_NEAR(sq / draws, (n - 1.0) / n, 0.02 * (n - 1.0) / n);
  Rng a(1), b(1);
  EXPECT_EQ(sample_prior(s, 5, a).z, sample_prior(s, 5, b).z);
  EXPECT_THROW(sample_prior(s, 0, a), std::invalid_argument);
}

TEST(Decode, ArgmaxWithLowestIndexTies) {
  LigandCloud z;
  z.coords   = Coords<double>::Zero(3, 3);
  z.features = Eigen::MatrixXd(3, kLigandTypes);
  z.features << 0.1, 0.3, 0.2, 0.0, 0.0,  //
      0.2, 0.2, 0.0, 0.0, 0.0,            //
      0.0, 0.0, 0.0, 0.0, 0.25;
  const LigandCloud d = decode(z);
  EXPECT_EQ(ligand_types(d), (std::vector<int>{1, 0, 4}));
  EXPECT_EQ(decode(d), d);
  EXPECT_EQ(d.coords, z.coords);
}

TEST(Generate, GridLengthAndDeterminism) {
  const Schedule& s = sched500();
  Rng data(13);
  const auto params        = perturbed({2, 8}, 9, 0.05);
  const PocketCloud pocket = random_pocket(6, data);
  for (int stride : {5, 20, 7}) {
    std::vector<TransitionRecord> recs;
    Rng a(21), b(21);
    const LigandCloud l1 = generate(s, params, pocket, 4, stride, a, &recs);
    const LigandCloud l2 = generate(s, params, pocket, 4, stride, b);
    EXPECT_EQ(l1, l2);
    EXPECT_EQ(static_cast<int>(recs.size()), (500 + stride - 1) / stride);
    EXPECT_EQ(recs.front().state.t, 500);
    EXPECT_EQ(recs.back().s, 0);
    for (const auto& r : recs) {
      EXPECT_LT(r.s, r.state.t);
      EXPECT_TRUE(std::isfinite(r.logp));
    }
  }
}

TEST(StrideConsistency, ExactPosteriorsPreserveMarginalMoments) {
  const Schedule& s = sched500();
  for (int stride : {1, 5, 10, 20, 7}) {
    const auto grid = coarse_grid(500, stride);
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
      const auto pp = posterior_params(s, grid[k + 1], grid[k]);
      // z_t ~ N(alpha_t m, sigma_t^2) pushed through q(z_s | z_t, m) gives N(alpha_s m, sigma_s^2).
      EXPECT_NEAR(pp.coef_zt * s.alpha(grid[k]) + pp.coef_m, s.alpha(grid[k + 1]), 1e-12);
      EXPECT_NEAR(pp.coef_zt * pp.coef_zt * s.sigma2(grid[k]) + pp.sigma_q * pp.sigma_q, s.sigma2(grid[k + 1]),
                  1e-12);
    }
  }
}

}  // namespace
}  // namespace pocketrl
