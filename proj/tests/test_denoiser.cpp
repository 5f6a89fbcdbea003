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

#include "pocketrl/denoiser.hpp"
#include "support.hpp"

namespace pocketrl {
namespace {

using testing::random_noisy_ligand;
using testing::random_permutation;
using testing::random_pocket;

DenoiserParams perturbed(const DenoiserConfig& cfg, std::uint64_t seed, double scale = 0.3) {
  DenoiserParams p = DenoiserParams::initialize(cfg, seed);
  Rng rng(seed + 1000);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    p.values()(i) += scale * rng.normal();
  }
  return p;
}

class DenoiserVariants : public ::testing::TestWithParam<bool> {
 protected:
  DenoiserConfig config() const { return {3, 16, GetParam()}; }
};

TEST_P(DenoiserVariants, UntrainedPredictsZero) {
  Rng rng(1);
  const auto params = DenoiserParams::initialize(config(), 3);
  const auto out    = forward(params, random_noisy_ligand(6, rng), random_pocket(10, rng), 100, 500);
  EXPECT_EQ(out.eps_coord.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(out.eps_feat.cwiseAbs().maxCoeff(), 0.0);
}

TEST_P(DenoiserVariants, OutputsAreCentroidFree) {
  Rng rng(2);
  const auto params = perturbed(config(), 4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto out = forward(params, random_noisy_ligand(rng.uniform_int(1, 12), rng),
                             random_pocket(rng.uniform_int(1, 20), rng), rng.uniform_int(1, 500), 500);
    EXPECT_LT(out.eps_coord.colwise().sum().cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST_P(DenoiserVariants, O3Equivariance) {
  Rng rng(3);
  const auto params = perturbed(config(), 5);
  const LigandCloud z = random_noisy_ligand(7, rng);
  const PocketCloud p = random_pocket(12, rng);
  const auto base     = forward(params, z, p, 250, 500);
  ASSERT_GT(base.eps_coord.norm(), 1e-3);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const O3Transform tf = sample_random_o3(seed);
    LigandCloud zr       = z;
    PocketCloud pr       = p;
    zr.coords            = apply_o3(tf, z.coords);
    pr.coords            = apply_o3(tf, p.coords);
    const auto out       = forward(params, zr, pr, 250, 500);
    const Coords<double> expected = apply_o3(tf, base.eps_coord);
    EXPECT_LE((out.eps_coord - expected).norm(), 1e-6 * expected.norm());
    EXPECT_LE((out.eps_feat - base.eps_feat).norm(), 1e-6 * base.eps_feat.norm());
  }
}

TEST_P(DenoiserVariants, PermutationEquivariance) {
  Rng rng(4);
  const auto params   = perturbed(config(), 6);
  const LigandCloud z = random_noisy_ligand(8, rng);
  const PocketCloud p = random_pocket(9, rng);
  const auto base     = forward(params, z, p, 30, 500);
  for (int trial = 0; trial < 20; ++trial) {
    const auto perm = random_permutation(8, rng);
    LigandCloud zp;
    zp.coords      = permute_rows(z.coords, perm);
    zp.features    = permute_rows(z.features, perm);
    const auto out = forward(params, zp, p, 30, 500);
    EXPECT_LE((out.eps_coord - permute_rows(base.eps_coord, perm)).norm(), 1e-9 * base.eps_coord.norm());
    EXPECT_LE((out.eps_feat - permute_rows(base.eps_feat, perm)).norm(), 1e-9 * base.eps_feat.norm());
    // Pocket atom order is irrelevant as well.
    const auto pperm = random_permutation(9, rng);
    PocketCloud pp;
    pp.coords = permute_rows(p.coords, pperm);
    for (int i : pperm) pp.types.push_back(p.types[i]);
    const auto out2 = forward(params, z, pp, 30, 500);
    EXPECT_LE((out2.eps_coord - base.eps_coord).norm(), 1e-9 * base.eps_coord.norm());
  }
}

TEST_P(DenoiserVariants, DeterministicAndPocketUntouched) {
  Rng rng(5);
  const auto params   = perturbed(config(), 7);
  const LigandCloud z = random_noisy_ligand(5, rng);
  const PocketCloud p = random_pocket(6, rng);
  const PocketCloud copy = p;
  const auto a = forward(params, z, p, 10, 500);
  const auto b = forward(params, z, p, 10, 500);
  EXPECT_EQ(a.eps_coord, b.eps_coord);
  EXPECT_EQ(a.eps_feat, b.eps_feat);
  EXPECT_EQ(p.coords, copy.coords);
}

TEST_P(DenoiserVariants, GradientMatchesFiniteDifferences) {
  const DenoiserConfig cfg{2, 8, GetParam()};
  Rng rng(6);
  const auto params   = perturbed(cfg, 8);
  const LigandCloud z = random_noisy_ligand(3, rng);
  const PocketCloud p = random_pocket(5, rng);
  Coords<double> wc(3, 3);
  Eigen::MatrixXd wf(3, kLigandTypes);
  rng.fill_normal(wc);
  rng.fill_normal(wf);
  auto value = [&](const DenoiserParams& q) {
    const auto out = forward(q, z, p, 77, 100);
    return (out.eps_coord.array() * wc.array()).sum() + (out.eps_feat.array() * wf.array()).sum();
  };
  const Eigen::VectorXd grad = gradient(params, [&](const DenoiserParams& q, Eigen::Ref<Eigen::VectorXd> g) {
    DenoiserTape tape;
    const auto out = forward(q, z, p, 77, 100, &tape);
    DenoiserOutput up{wc, wf};
    backward(q, tape, up, g);
    return (out.eps_coord.array() * wc.array()).sum() + (out.eps_feat.array() * wf.array()).sum();
  });
  const double h = 1e-5;
  for (int k = 0; k < 30; ++k) {
    Eigen::VectorXd dir(params.size());
    rng.fill_normal(dir);
    dir.normalize();
    DenoiserParams plus = params, minus = params;
    plus.values() += h * dir;
    minus.values() -= h * dir;
    const double fd = (value(plus) - value(minus)) / (2 * h);
    const double an = grad.dot(dir);
    EXPECT_LE(std::abs(fd - an), 1e-4 * std::max(std::abs(fd), std::abs(an)) + 1e-9) << "direction " << k;
  }
}

INSTANTIATE_TEST_SUITE_P(PocketContext, DenoiserVariants, ::testing::Values(false, true));

TEST(DenoiserGradient, ConstantAndQuadraticLosses) {
  const auto params = perturbed({2, 8}, 9);
  const Eigen::VectorXd zero = gradient(params, [](const DenoiserParams&, Eigen::Ref<Eigen::VectorXd>) { return 3.0; });
  EXPECT_EQ(zero, Eigen::VectorXd::Zero(params.size()));
  const Eigen::VectorXd quad = gradient(params, [](const DenoiserParams& q, Eigen::Ref<Eigen::VectorXd> g) {
    g += q.values();
    return 0.5 * q.values().squaredNorm();
  });
  EXPECT_EQ(quad, params.values());
  EXPECT_THROW(gradient(params, [](const DenoiserParams&, Eigen::Ref<Eigen::VectorXd>) { return std::nan(""); }),
               std::runtime_error);
}

TEST(DenoiserParams, LayoutAndInitialization) {
  const DenoiserConfig cfg{4, 32};
  const auto a = DenoiserParams::initialize(cfg, 1);
  const auto b = DenoiserParams::initialize(cfg, 1);
  EXPECT_EQ(a, b);
  EXPECT_FALSE(a == DenoiserParams::initialize(cfg, 2));
  EXPECT_EQ(a.size(), a.layout().total);
  EXPECT_TRUE(a.values().allFinite());
  EXPECT_THROW(DenoiserLayout(DenoiserConfig{0, 8}), std::invalid_argument);
}

TEST(DenoiserForward, RejectsBadInputs) {
  Rng rng(10);
  const auto params = DenoiserParams::initialize({2, 8}, 1);
  const PocketCloud p = random_pocket(4, rng);
  LigandCloud z = random_noisy_ligand(3, rng);
  EXPECT_THROW(forward(params, z, p, 0, 100), std::invalid_argument);
  EXPECT_THROW(forward(params, z, p, 101, 100), std::invalid_argument);
  z.coords(0, 0) = std::nan("");
  EXPECT_THROW(forward(params, z, p, 5, 100), std::invalid_argument);
  LigandCloud wrong = random_noisy_ligand(3, rng);
  wrong.features.resize(3, 4);
  EXPECT_THROW(forward(params, wrong, p, 5, 100), std::invalid_argument);
}

}  // namespace
}  // namespace pocketrl
