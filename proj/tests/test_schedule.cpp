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

#include <cmath>

#include "pocketrl/rng.hpp"
#include "pocketrl/schedule.hpp"

namespace pocketrl {
namespace {

const Schedule& reference() {
  static const Schedule sched = Schedule::build(500, 1e-4);
  return sched;
}

TEST(Schedule, EndpointsMatchFormula) {
  const Schedule& s = reference();
  EXPECT_NEAR(s.alpha2(0), 1.0 - 1e-4, 1e-15);
  // Cumulative clipping leaves alpha_T^2 = 1e-4 + 1.597e-8.
  EXPECT_NEAR(s.alpha2(500), 1e-4, 1e-7);
  EXPECT_NEAR(s.alpha2(500), 1.000159648223968e-4, 1e-16);
  EXPECT_GE(s.alpha2(0), 1.0 - 2e-4);
  EXPECT_LE(s.alpha2(500), 2e-4);
}

TEST(Schedule, VariancePreservingAndMonotone) {
  for (int T : {2, 10, 500, 1000}) {
    const Schedule s = Schedule::build(T, 1e-4);
    for (int t = 0; t <= T; ++t) {
      EXPECT_LT(std::abs(s.alpha2(t) + s.sigma2(t) - 1.0), 1e-12);
      if (t > 0) {
        EXPECT_LT(s.alpha(t), s.alpha(t - 1));
        EXPECT_GT(s.sigma(t), s.sigma(t - 1));
        EXPECT_LT(s.snr(t), s.snr(t - 1));
      }
    }
  }
}

TEST(Schedule, RejectsBadArguments) {
  EXPECT_THROW(Schedule::build(1, 1e-4), std::invalid_argument);
  EXPECT_THROW(Schedule::build(10, 0.0), std::invalid_argument);
  EXPECT_THROW(Schedule::build(10, 0.5), std::invalid_argument);
  EXPECT_THROW(reference().alpha(501), std::out_of_range);
}

TEST(Schedule, DeterministicBuild) {
  const Schedule a = Schedule::build(500, 1e-4);
  EXPECT_EQ(a.alpha(), reference().alpha());
  EXPECT_EQ(a.sigma(), reference().sigma());
}

TEST(TransitionParams, ReferenceValues) {
  // Independent high-precision evaluation of the schedule at (495, 500).
  const auto tp = transition_params(reference(), 495, 500);
  EXPECT_NEAR(tp.alpha_ts, 0.44908042470031236, 1e-12);
  EXPECT_NEAR(tp.sigma2_ts, 0.79832677215098708, 1e-12);
  EXPECT_DOUBLE_EQ(tp.alpha_ts, reference().alpha(500) / reference().alpha(495));
}

TEST(TransitionParams, CompositionAndMarginals) {
  const Schedule& s = reference();
  Rng rng(7);
  for (int k = 0; k < 1000; ++k) {
    int a = rng.uniform_int(0, 500), b = rng.uniform_int(0, 500);
    if (a == b) continue;
    const int lo = std::min(a, b), hi = std::max(a, b);
    const auto tp = transition_params(s, lo, hi);
    EXPECT_LE(std::abs(tp.alpha_ts * s.alpha(lo) - s.alpha(hi)), 1e-12);
    EXPECT_LE(std::abs(tp.alpha_ts * tp.alpha_ts * s.sigma2(lo) + tp.sigma2_ts - s.sigma2(hi)), 1e-12);
    EXPECT_GE(tp.sigma2_ts, 0.0);
    if (hi - lo >= 2) {
      const int mid = rng.uniform_int(lo + 1, hi - 1);
      EXPECT_NEAR(tp.alpha_ts, transition_params(s, mid, hi).alpha_ts * transition_params(s, lo, mid).alpha_ts,
                  1e-12);
    }
  }
}

TEST(TransitionParams, IdentityAndErrors) {
  const auto id = identity_transition(reference(), 42);
  EXPECT_EQ(id.alpha_ts, 1.0);
  EXPECT_EQ(id.sigma2_ts, 0.0);
  EXPECT_THROW(transition_params(reference(), 5, 5), std::invalid_argument);
  EXPECT_THROW(transition_params(reference(), 6, 5), std::invalid_argument);
  EXPECT_THROW(transition_params(reference(), -1, 5), std::invalid_argument);
  EXPECT_THROW(transition_params(reference(), 0, 501), std::invalid_argument);
}

TEST(PosteriorParams, SnrIdentityOverRandomPairs) {
  const Schedule& s = reference();
  Rng rng(11);
  for (int k = 0; k < 1000; ++k) {
    const int t  = rng.uniform_int(1, 500);
    const int sp = rng.uniform_int(0, t - 1);
    const auto pp = posterior_params(s, sp, t);
    const double snr_form = s.sigma2(sp) * (1.0 - s.snr(t) / s.snr(sp));
    EXPECT_LE(std::abs(pp.sigma_q * pp.sigma_q - snr_form), 1e-10);
  }
}

TEST(PosteriorParams, NoiselessPointMapsToNoiselessPoint) {
  const Schedule& s = reference();
  for (auto [sp, t] : {std::pair{0, 1}, {10, 30}, {245, 250}, {495, 500}, {0, 500}}) {
    const auto pp = posterior_params(s, sp, t);
    // mu_q(z_t = alpha_t m, m) = alpha_s m.
    EXPECT_NEAR(pp.coef_zt * s.alpha(t) + pp.coef_m, s.alpha(sp), 1e-12);
  }
  const auto pp = posterior_params(s, 495, 500);
  EXPECT_NEAR(pp.coef_zt, 0.44890260931450644, 1e-12);
  EXPECT_NEAR(pp.coef_m, 0.01778011935499577, 1e-12);
  EXPECT_NEAR(pp.sigma_q, 0.89331443015604568, 1e-12);
}

TEST(PosteriorParams, LargerStrideLargerVarianceAtEqualS) {
  const Schedule& s = reference();
  for (int sp = 0; sp + 20 <= 500; ++sp) {
    EXPECT_GT(posterior_params(s, sp, sp + 20).sigma_q, posterior_params(s, sp, sp + 1).sigma_q) << "s=" << sp;
  }
}

TEST(PosteriorParams, MonotoneInTForFixedS) {
  const Schedule& s = reference();
  for (int sp : {0, 1, 50, 250, 480}) {
    for (int t = sp + 2; t <= 500; ++t) {
      EXPECT_GT(posterior_params(s, sp, t).sigma_q, posterior_params(s, sp, t - 1).sigma_q);
    }
  }
}

TEST(CoarseGrid, TransitionCounts) {
  EXPECT_EQ(coarse_grid(500, 5).size(), 101u);
  EXPECT_EQ(coarse_grid(500, 20).size(), 26u);
  const auto g = coarse_grid(10, 3);
  EXPECT_EQ(g, (std::vector<int>{10, 7, 4, 1, 0}));
  EXPECT_EQ(coarse_grid(10, 10), (std::vector<int>{10, 0}));
  for (int stride = 1; stride <= 37; ++stride) {
    const auto grid = coarse_grid(100, stride);
    EXPECT_EQ(static_cast<int>(grid.size()) - 1, (100 + stride - 1) / stride);
    EXPECT_EQ(grid.front(), 100);
    EXPECT_EQ(grid.back(), 0);
  }
  EXPECT_THROW(coarse_grid(10, 0), std::invalid_argument);
  EXPECT_THROW(coarse_grid(10, 11), std::invalid_argument);
}

TEST(VarianceProfile, MatchesPosteriorAndSingleTransitionLimit) {
  const Schedule& s = reference();
  for (int stride : {1, 5, 10, 20}) {
    for (const auto& p : variance_profile(s, stride)) {
      EXPECT_EQ(p.sigma_q, posterior_params(s, p.s, p.t).sigma_q);
      EXPECT_EQ(p.stride, stride);
    }
  }
  const auto one = variance_profile(s, 500);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].t, 500);
  EXPECT_EQ(one[0].s, 0);
  EXPECT_EQ(one[0].sigma_q, posterior_params(s, 0, 500).sigma_q);
}

}  // namespace
}  // namespace pocketrl
