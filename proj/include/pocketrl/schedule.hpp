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

#ifndef POCKETRL_SCHEDULE_HPP
#define POCKETRL_SCHEDULE_HPP

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace pocketrl {

//! Variance-preserving noise schedule on the integer grid t = 0..T.
//!
//! alpha_t^2 + sigma_t^2 = 1 for every t. Arrays are precomputed once; all
//! transition and posterior quantities are derived from the stored arrays.
template <typename Scalar>
class BasicSchedule {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  //! Polynomial (power 2) schedule with cumulative step clipping at 0.001,
  //! rescaled so that alpha_0^2 = 1 - precision and alpha_T^2 ~ precision.
  static BasicSchedule build(int T, Scalar precision) {
    if (T < 2) {
      throw std::invalid_argument("build_schedule: T must be >= 2");
    }
    if (!(precision > Scalar(0) && precision < Scalar(0.5))) {
      throw std::invalid_argument("build_schedule: precision must lie in (0, 0.5)");
    }
    constexpr Scalar kClip = Scalar(0.001);
    BasicSchedule sched;
    sched.T_         = T;
    sched.precision_ = precision;
    sched.alpha2_.resize(T + 1);
    Scalar prev_raw = Scalar(1);
    Scalar cumulative = Scalar(1);
    for (int t = 0; t <= T; ++t) {
      const Scalar frac = Scalar(t) / Scalar(T);
      const Scalar base = Scalar(1) - frac * frac;
      const Scalar raw  = base * base;
      Scalar ratio      = prev_raw > Scalar(0) ? raw / prev_raw : Scalar(0);
      ratio             = std::clamp(ratio, kClip, Scalar(1));
      cumulative *= ratio;
      prev_raw = raw;
      sched.alpha2_(t) = (Scalar(1) - Scalar(2) * precision) * cumulative + precision;
    }
    sched.sigma2_ = (Scalar(1) - sched.alpha2_.array()).matrix();
    sched.alpha_  = sched.alpha2_.array().sqrt().matrix();
    sched.sigma_  = sched.sigma2_.array().sqrt().matrix();
    sched.snr_    = (sched.alpha2_.array() / sched.sigma2_.array()).matrix();
    return sched;
  }

  int T() const { return T_; }
  Scalar precision() const { return precision_; }

  const Vector& alpha() const { return alpha_; }
  const Vector& sigma() const { return sigma_; }
  const Vector& alpha2() const { return alpha2_; }
  const Vector& sigma2() const { return sigma2_; }
  const Vector& snr() const { return snr_; }

  Scalar alpha(int t) const { return alpha_(check(t)); }
  Scalar sigma(int t) const { return sigma_(check(t)); }
  Scalar alpha2(int t) const { return alpha2_(check(t)); }
  Scalar sigma2(int t) const { return sigma2_(check(t)); }
  Scalar snr(int t) const { return snr_(check(t)); }

 private:
  int check(int t) const {
    if (t < 0 || t > T_) {
      throw std::out_of_range("schedule step " + std::to_string(t) + " outside [0, " +
                              std::to_string(T_) + "]");
    }
    return t;
  }

  int T_ = 0;
  Scalar precision_ = Scalar(0);
  Vector alpha_, sigma_, alpha2_, sigma2_, snr_;
};

using Schedule = BasicSchedule<double>;

//! Parameters of q(z_t | z_s) for s < t.
template <typename Scalar>
struct BasicTransitionParams {
  Scalar alpha_ts  = Scalar(1);
  Scalar sigma2_ts = Scalar(0);
  int s = 0;
  int t = 0;
};
using TransitionParams = BasicTransitionParams<double>;

//! Mean coefficients and standard deviation of q(z_s | z_t, m).
template <typename Scalar>
struct BasicPosteriorParams {
  Scalar coef_zt = Scalar(0);
  Scalar coef_m  = Scalar(0);
  Scalar sigma_q = Scalar(0);
  int s = 0;
  int t = 0;
};
using PosteriorParams = BasicPosteriorParams<double>;

namespace detail {
inline void check_step_pair(int T, int s, int t) {
  if (s < 0 || t > T || s >= t) {
    throw std::invalid_argument("step pair requires 0 <= s < t <= T (got s=" + std::to_string(s) +
                                ", t=" + std::to_string(t) + ", T=" + std::to_string(T) + ")");
  }
}
}  // namespace detail

template <typename Scalar>
BasicTransitionParams<Scalar> transition_params(const BasicSchedule<Scalar>& sched, int s, int t) {
  detail::check_step_pair(sched.T(), s, t);
  BasicTransitionParams<Scalar> p;
  p.s         = s;
  p.t         = t;
  p.alpha_ts  = sched.alpha(t) / sched.alpha(s);
  p.sigma2_ts = std::max(Scalar(0), sched.sigma2(t) - p.alpha_ts * p.alpha_ts * sched.sigma2(s));
  return p;
}

//! The s == t limit: identity transition (alpha 1, variance 0).
template <typename Scalar>
BasicTransitionParams<Scalar> identity_transition(const BasicSchedule<Scalar>& sched, int t) {
  if (t < 0 || t > sched.T()) {
    throw std::out_of_range("identity_transition: step outside schedule");
  }
  return BasicTransitionParams<Scalar>{Scalar(1), Scalar(0), t, t};
}

template <typename Scalar>
BasicPosteriorParams<Scalar> posterior_params(const BasicSchedule<Scalar>& sched, int s, int t) {
  const auto tr = transition_params(sched, s, t);
  BasicPosteriorParams<Scalar> p;
  p.s       = s;
  p.t       = t;
  p.coef_zt = tr.alpha_ts * sched.sigma2(s) / sched.sigma2(t);
  p.coef_m  = sched.alpha(s) * tr.sigma2_ts / sched.sigma2(t);
  p.sigma_q = std::sqrt(tr.sigma2_ts) * sched.sigma(s) / sched.sigma(t);
  return p;
}

//! Timesteps visited by a coarse reverse process: T, T-stride, ..., then 0.
//! When stride does not divide T the final transition is shortened so the
//! grid always terminates at 0; the grid has ceil(T / stride) transitions.
std::vector<int> coarse_grid(int T, int stride);

template <typename Scalar>
struct BasicVariancePoint {
  int t = 0;
  int s = 0;
  int stride = 0;
  Scalar sigma_q = Scalar(0);
};
using VariancePoint = BasicVariancePoint<double>;

//! sigma_q(s, t) for each transition (t -> s) of the coarse grid, in
//! denoising order (t descending).
template <typename Scalar>
std::vector<BasicVariancePoint<Scalar>> variance_profile(const BasicSchedule<Scalar>& sched,
                                                          int stride) {
  if (stride < 1 || stride > sched.T()) {
    throw std::invalid_argument("variance_profile: stride must lie in [1, T]");
  }
  const auto grid = coarse_grid(sched.T(), stride);
  std::vector<BasicVariancePoint<Scalar>> out;
  out.reserve(grid.size() - 1);
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    const int t = grid[k];
    const int s = grid[k + 1];
    out.push_back({t, s, stride, posterior_params(sched, s, t).sigma_q});
  }
  return out;
}

}  // namespace pocketrl

#endif  // POCKETRL_SCHEDULE_HPP
