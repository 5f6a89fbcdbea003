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

#ifndef POCKETRL_DENOISER_HPP
#define POCKETRL_DENOISER_HPP

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pocketrl/geometry.hpp"

namespace pocketrl {

struct DenoiserConfig {
  int layers = 4;
  int hidden = 32;
  //! When false (default) pocket nodes keep their input embedding and act as
  //! static context; when true they also receive messages and are updated.
  bool pocket_messages = false;

  bool operator==(const DenoiserConfig&) const = default;
};

//! Number of per-node input channels: ligand features, pocket one-hot,
//! ligand/pocket flag, t/T.
inline constexpr int kNodeInputDim = kLigandTypes + kPocketTypes + 2;

//! Offsets of every tensor inside the flat parameter vector. Tensors are
//! column-major; the order is fixed and is the serialization order.
struct DenoiserLayout {
  struct Layer {
    Eigen::Index w_recv, w_send, w_dist, b_edge1;  // first edge linear (split over h_i, h_j, |x_i-x_j|^2)
    Eigen::Index w_edge2, b_edge2;                 // second edge linear
    Eigen::Index w_coord1, b_coord1;               // coordinate MLP hidden
    Eigen::Index w_coord2, b_coord2;               // coordinate MLP scalar head
    Eigen::Index w_node1, b_node1;                 // node MLP hidden, input [h; agg]
    Eigen::Index w_node2, b_node2;                 // node MLP output
  };

  explicit DenoiserLayout(const DenoiserConfig& config);

  DenoiserConfig config;
  Eigen::Index w_embed = 0, b_embed = 0;
  std::vector<Layer> layers;
  Eigen::Index w_out = 0, b_out = 0;
  Eigen::Index total = 0;
};

//! Flat parameter vector of the equivariant denoiser.
template <typename Scalar>
class BasicDenoiserParams {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  BasicDenoiserParams() : layout_(DenoiserConfig{}) {}

  //! Uniform fan-in initialization; output heads (feature head and each
  //! coordinate-MLP scalar head) start at zero so the untrained network
  //! predicts eps_hat = 0.
  static BasicDenoiserParams initialize(const DenoiserConfig& config, std::uint64_t seed);
  static BasicDenoiserParams zeros(const DenoiserConfig& config);

  const DenoiserConfig& config() const { return layout_.config; }
  const DenoiserLayout& layout() const { return layout_; }
  Vector& values() { return values_; }
  const Vector& values() const { return values_; }
  Eigen::Index size() const { return values_.size(); }

  bool operator==(const BasicDenoiserParams& other) const {
    return config() == other.config() && values_ == other.values_;
  }

 private:
  explicit BasicDenoiserParams(const DenoiserConfig& config)
      : layout_(config), values_(Vector::Zero(layout_.total)) {}

  DenoiserLayout layout_;
  Vector values_;
};

using DenoiserParams = BasicDenoiserParams<double>;

//! eps_hat split into the coordinate part (centroid-free) and feature part.
template <typename Scalar>
struct BasicDenoiserOutput {
  Coords<Scalar> eps_coord;
  FeatureMatrix<Scalar> eps_feat;
};
using DenoiserOutput = BasicDenoiserOutput<double>;

//! Intermediate values recorded by a forward pass for the backward pass.
template <typename Scalar>
struct BasicDenoiserTape {
  using Matrix   = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Matrix3X = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;
  using Vector   = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Layer {
    Matrix h;        // H x N node features entering the layer
    Matrix3X x;      // 3 x N coordinates entering the layer
    Matrix3X diff;   // x_recv - x_send per edge
    Vector dist;     // |diff| per edge
    Vector dist2;    // |diff|^2 per edge
    Matrix u;        // first edge pre-activation
    Matrix v;        // second edge pre-activation
    Matrix msg;      // silu(v)
    Matrix p;        // coordinate MLP pre-activation (ligand receivers)
    Vector c;        // coordinate MLP scalar output
    Matrix node_in;  // [h; agg] for updated receivers
    Matrix g;        // node MLP pre-activation
    Eigen::Index edges         = 0;
    Eigen::Index updated_nodes = 0;
  };

  int n_ligand = 0;
  int n_nodes  = 0;
  std::vector<int> recv, send;  // ligand receivers first
  Eigen::Index ligand_edges = 0;
  Matrix node_input;  // kNodeInputDim x N
  std::vector<Layer> layers;
  Matrix h_final;     // H x n_ligand
};
using DenoiserTape = BasicDenoiserTape<double>;

//! Evaluates eps_hat = phi(z_t, pocket, t). Input coordinates must already
//! be expressed in the ligand-centroid frame. Pocket atoms are conditioning
//! only: their coordinates are never updated.
//! When `tape` is non-null the intermediates needed by backward are stored.
template <typename Scalar>
BasicDenoiserOutput<Scalar> forward(const BasicDenoiserParams<Scalar>& params,
                                    const BasicLigandCloud<Scalar>& z_t,
                                    const BasicPocketCloud<Scalar>& pocket, int t, int T,
                                    BasicDenoiserTape<Scalar>* tape = nullptr);

//! Reverse-mode pass: adds d(loss)/d(params) to `grad` given
//! d(loss)/d(eps_coord) and d(loss)/d(eps_feat) in `upstream`.
template <typename Scalar>
void backward(const BasicDenoiserParams<Scalar>& params, const BasicDenoiserTape<Scalar>& tape,
              const BasicDenoiserOutput<Scalar>& upstream,
              Eigen::Ref<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> grad);

//! Gradient of a scalar loss. `loss_fn(params, grad)` returns the loss and
//! accumulates its exact gradient into `grad` (typically through
//! forward/backward). Throws on a non-finite loss.
template <typename Scalar, typename LossFn>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> gradient(const BasicDenoiserParams<Scalar>& params, LossFn&& loss_fn) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> grad = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(params.size());
  const Scalar loss = loss_fn(params, Eigen::Ref<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(grad));
  if (!std::isfinite(static_cast<double>(loss))) {
    throw std::runtime_error("gradient: loss is not finite");
  }
  return grad;
}

//! Non-template entry point so plain Eigen vectors convert to Ref.
inline void backward(const DenoiserParams& params, const DenoiserTape& tape, const DenoiserOutput& upstream,
                     Eigen::Ref<Eigen::VectorXd> grad);

extern template class BasicDenoiserParams<double>;
extern template DenoiserOutput forward<double>(const DenoiserParams&, const LigandCloud&, const PocketCloud&, int,
                                               int, DenoiserTape*);
extern template void backward<double>(const DenoiserParams&, const DenoiserTape&, const DenoiserOutput&,
                                      Eigen::Ref<Eigen::VectorXd>);

inline void backward(const DenoiserParams& params, const DenoiserTape& tape, const DenoiserOutput& upstream,
                     Eigen::Ref<Eigen::VectorXd> grad) {
  backward<double>(params, tape, upstream, grad);
}

}  // namespace pocketrl

#endif  // POCKETRL_DENOISER_HPP
