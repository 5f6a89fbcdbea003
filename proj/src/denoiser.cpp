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

// Joint ligand+pocket graph, fully connected. Per layer l:
//   m_ij  = silu(W2 silu(Wr h_i + Ws h_j + wd |x_i - x_j|^2 + b1) + b2)
//   x_i  += mean_j (x_i - x_j) / (|x_i - x_j| + 1) * (wc2 . silu(Wc1 m_ij + bc1) + bc2)   (ligand i only)
//   h_i  += Wn2 silu(Wn1 [h_i; mean_j m_ij] + bn1) + bn2
// Output: eps_coord = centroid-free (x_L - x_0) on ligand atoms,
//         eps_feat  = Wo h_L + bo on ligand atoms.
// Pocket nodes only send messages unless pocket_messages is set; even then
// the last layer evaluates ligand receivers only, since pocket states after
// it would not reach the output.

#include "pocketrl/denoiser.hpp"

#include "pocketrl/rng.hpp"

namespace pocketrl {

DenoiserLayout::DenoiserLayout(const DenoiserConfig& cfg) : config(cfg) {
  if (cfg.layers < 1 || cfg.hidden < 1) {
    throw std::invalid_argument("DenoiserConfig: layers and hidden must be positive");
  }
  const Eigen::Index h = cfg.hidden;
  Eigen::Index at = 0;
  auto take = [&at](Eigen::Index n) {
    const Eigen::Index start = at;
    at += n;
    return start;
  };
  w_embed = take(h * kNodeInputDim);
  b_embed = take(h);
  layers.resize(cfg.layers);
  for (auto& l : layers) {
    l.w_recv   = take(h * h);
    l.w_send   = take(h * h);
    l.w_dist   = take(h);
    l.b_edge1  = take(h);
    l.w_edge2  = take(h * h);
    l.b_edge2  = take(h);
    l.w_coord1 = take(h * h);
    l.b_coord1 = take(h);
    l.w_coord2 = take(h);
    l.b_coord2 = take(1);
    l.w_node1  = take(h * 2 * h);
    l.b_node1  = take(h);
    l.w_node2  = take(h * h);
    l.b_node2  = take(h);
  }
  w_out = take(kLigandTypes * h);
  b_out = take(kLigandTypes);
  total = at;
}

template <typename Scalar>
BasicDenoiserParams<Scalar> BasicDenoiserParams<Scalar>::zeros(const DenoiserConfig& config) {
  return BasicDenoiserParams(config);
}

template <typename Scalar>
BasicDenoiserParams<Scalar> BasicDenoiserParams<Scalar>::initialize(const DenoiserConfig& config,
                                                                    std::uint64_t seed) {
  BasicDenoiserParams out(config);
  Rng rng(Rng::derive(seed, 0xde));
  const Eigen::Index h = config.hidden;
  auto fill = [&](Eigen::Index offset, Eigen::Index count, Eigen::Index fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index k = 0; k < count; ++k) {
      out.values_(offset + k) = static_cast<Scalar>((2.0 * rng.uniform() - 1.0) * bound);
    }
  };
  const auto& lay = out.layout_;
  fill(lay.w_embed, h * kNodeInputDim, kNodeInputDim);
  fill(lay.b_embed, h, kNodeInputDim);
  const Eigen::Index edge_fan_in = 2 * h + 1;
  for (const auto& l : lay.layers) {
    fill(l.w_recv, h * h, edge_fan_in);
    fill(l.w_send, h * h, edge_fan_in);
    fill(l.w_dist, h, edge_fan_in);
    fill(l.b_edge1, h, edge_fan_in);
    fill(l.w_edge2, h * h, h);
    fill(l.b_edge2, h, h);
    fill(l.w_coord1, h * h, h);
    fill(l.b_coord1, h, h);
    // w_coord2, b_coord2 stay zero.
    fill(l.w_node1, h * 2 * h, 2 * h);
    fill(l.b_node1, h, 2 * h);
    fill(l.w_node2, h * h, h);
    fill(l.b_node2, h, h);
  }
  // w_out, b_out stay zero.
  return out;
}

namespace {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Mat3X = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;

template <typename Scalar>
using CMap = Eigen::Map<const Mat<Scalar>>;
template <typename Scalar>
using CVMap = Eigen::Map<const Vec<Scalar>>;
template <typename Scalar>
using MMap = Eigen::Map<Mat<Scalar>>;
template <typename Scalar>
using MVMap = Eigen::Map<Vec<Scalar>>;

template <typename Derived>
Mat<typename Derived::Scalar> silu(const Eigen::MatrixBase<Derived>& u) {
  using Scalar = typename Derived::Scalar;
  const auto a = u.derived().array();
  return (a / (Scalar(1) + (-a).exp())).matrix();
}

template <typename Derived>
Mat<typename Derived::Scalar> silu_grad(const Eigen::MatrixBase<Derived>& u) {
  using Scalar = typename Derived::Scalar;
  const auto a = u.derived().array();
  const Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic> s = Scalar(1) / (Scalar(1) + (-a).exp());
  return (s * (Scalar(1) + a * (Scalar(1) - s))).matrix();
}

// Parameter views for one layer.
template <typename Scalar, typename Ptr>
struct LayerView {
  using M = std::conditional_t<std::is_const_v<std::remove_pointer_t<Ptr>>, CMap<Scalar>, MMap<Scalar>>;
  using V = std::conditional_t<std::is_const_v<std::remove_pointer_t<Ptr>>, CVMap<Scalar>, MVMap<Scalar>>;

  LayerView(Ptr base, const DenoiserLayout::Layer& l, Eigen::Index h)
      : w_recv(base + l.w_recv, h, h),
        w_send(base + l.w_send, h, h),
        w_dist(base + l.w_dist, h),
        b_edge1(base + l.b_edge1, h),
        w_edge2(base + l.w_edge2, h, h),
        b_edge2(base + l.b_edge2, h),
        w_coord1(base + l.w_coord1, h, h),
        b_coord1(base + l.b_coord1, h),
        w_coord2(base + l.w_coord2, h),
        b_coord2(*(base + l.b_coord2)),
        w_node1(base + l.w_node1, h, 2 * h),
        b_node1(base + l.b_node1, h),
        w_node2(base + l.w_node2, h, h),
        b_node2(base + l.b_node2, h) {}

  M w_recv, w_send;
  V w_dist, b_edge1;
  M w_edge2;
  V b_edge2;
  M w_coord1;
  V b_coord1, w_coord2;
  std::remove_pointer_t<Ptr>& b_coord2;
  M w_node1;
  V b_node1;
  M w_node2;
  V b_node2;
};

template <typename Scalar>
void check_inputs(const BasicDenoiserParams<Scalar>& params, const BasicLigandCloud<Scalar>& z_t,
                  const BasicPocketCloud<Scalar>& pocket, int t, int T) {
  if (params.size() != params.layout().total) {
    throw std::invalid_argument("denoiser: parameter vector has wrong size");
  }
  if (z_t.size() < 1 || z_t.feature_dim() != kLigandTypes) {
    throw std::invalid_argument("denoiser: ligand must have >= 1 atom and " + std::to_string(kLigandTypes) +
                                " feature channels");
  }
  if (z_t.features.rows() != z_t.coords.rows()) {
    throw std::invalid_argument("denoiser: ligand coords/features row mismatch");
  }
  pocket.validate();
  if (!z_t.coords.allFinite() || !z_t.features.allFinite()) {
    throw std::invalid_argument("denoiser: non-finite ligand input");
  }
  if (T < 1 || t < 1 || t > T) {
    throw std::invalid_argument("denoiser: step outside [1, T]");
  }
}

}  // namespace

template <typename Scalar>
BasicDenoiserOutput<Scalar> forward(const BasicDenoiserParams<Scalar>& params, const BasicLigandCloud<Scalar>& z_t,
                                    const BasicPocketCloud<Scalar>& pocket, int t, int T,
                                    BasicDenoiserTape<Scalar>* tape) {
  check_inputs(params, z_t, pocket, t, T);
  const auto& lay     = params.layout();
  const Eigen::Index h = lay.config.hidden;
  const int n_lig     = z_t.size();
  const int n_nodes   = n_lig + pocket.size();
  const Scalar* base  = params.values().data();
  const Scalar inv_deg = n_nodes > 1 ? Scalar(1) / Scalar(n_nodes - 1) : Scalar(0);

  // Edge list: every ordered pair i != j, ligand receivers first.
  std::vector<int> recv, send;
  recv.reserve(static_cast<std::size_t>(n_nodes) * (n_nodes - 1));
  send.reserve(recv.capacity());
  for (int i = 0; i < n_nodes; ++i) {
    for (int j = 0; j < n_nodes; ++j) {
      if (i != j) {
        recv.push_back(i);
        send.push_back(j);
      }
    }
  }
  const Eigen::Index all_edges    = static_cast<Eigen::Index>(recv.size());
  const Eigen::Index ligand_edges = static_cast<Eigen::Index>(n_lig) * (n_nodes - 1);

  Mat<Scalar> node_input = Mat<Scalar>::Zero(kNodeInputDim, n_nodes);
  const Scalar time = Scalar(t) / Scalar(T);
  Mat3X<Scalar> x(3, n_nodes);
  for (int i = 0; i < n_lig; ++i) {
    x.col(i) = z_t.coords.row(i).transpose();
    node_input.col(i).head(kLigandTypes) = z_t.features.row(i).transpose();
    node_input(kLigandTypes + kPocketTypes, i) = Scalar(1);
    node_input(kNodeInputDim - 1, i) = time;
  }
  for (int p = 0; p < pocket.size(); ++p) {
    const int i = n_lig + p;
    x.col(i) = pocket.coords.row(p).transpose();
    node_input(kLigandTypes + pocket.types[p], i) = Scalar(1);
    node_input(kNodeInputDim - 1, i) = time;
  }
  const Mat3X<Scalar> x0 = x.leftCols(n_lig);

  Mat<Scalar> hmat = CMap<Scalar>(base + lay.w_embed, h, kNodeInputDim) * node_input;
  hmat.colwise() += CVMap<Scalar>(base + lay.b_embed, h);

  if (tape) {
    tape->n_ligand     = n_lig;
    tape->n_nodes      = n_nodes;
    tape->recv         = recv;
    tape->send         = send;
    tape->ligand_edges = ligand_edges;
    tape->node_input   = node_input;
    tape->layers.assign(lay.layers.size(), {});
  }

  for (std::size_t l = 0; l < lay.layers.size(); ++l) {
    const LayerView<Scalar, const Scalar*> w(base, lay.layers[l], h);
    const bool last             = l + 1 == lay.layers.size() || !lay.config.pocket_messages;
    const Eigen::Index edges    = last ? ligand_edges : all_edges;
    const Eigen::Index updated  = last ? n_lig : n_nodes;

    const Mat<Scalar> a = w.w_recv * hmat.leftCols(updated);
    const Mat<Scalar> b = w.w_send * hmat;

    Mat3X<Scalar> diff(3, edges);
    Vec<Scalar> dist2(edges), dist(edges);
    Mat<Scalar> u(h, edges);
    for (Eigen::Index e = 0; e < edges; ++e) {
      const int i = recv[e], j = send[e];
      diff.col(e) = x.col(i) - x.col(j);
      dist2(e)    = diff.col(e).squaredNorm();
      dist(e)     = std::sqrt(dist2(e));
      u.col(e)    = a.col(i) + b.col(j) + w.w_dist * dist2(e) + w.b_edge1;
    }
    const Mat<Scalar> act = silu(u);
    Mat<Scalar> v = w.w_edge2 * act;
    v.colwise() += w.b_edge2;
    const Mat<Scalar> msg = silu(v);

    Mat<Scalar> agg = Mat<Scalar>::Zero(h, updated);
    for (Eigen::Index e = 0; e < edges; ++e) {
      agg.col(recv[e]) += msg.col(e);
    }
    agg *= inv_deg;

    Mat<Scalar> p = w.w_coord1 * msg.leftCols(ligand_edges);
    p.colwise() += w.b_coord1;
    const Vec<Scalar> c = (w.w_coord2.transpose() * silu(p)).transpose().array() + w.b_coord2;

    Mat3X<Scalar> x_next = x;
    for (Eigen::Index e = 0; e < ligand_edges; ++e) {
      x_next.col(recv[e]) += diff.col(e) * (inv_deg * c(e) / (dist(e) + Scalar(1)));
    }

    Mat<Scalar> node_in(2 * h, updated);
    node_in.topRows(h)    = hmat.leftCols(updated);
    node_in.bottomRows(h) = agg;
    Mat<Scalar> g = w.w_node1 * node_in;
    g.colwise() += w.b_node1;
    Mat<Scalar> dh = w.w_node2 * silu(g);
    dh.colwise() += w.b_node2;

    if (tape) {
      auto& rec         = tape->layers[l];
      rec.h             = hmat;
      rec.x             = x;
      rec.diff          = std::move(diff);
      rec.dist          = std::move(dist);
      rec.dist2         = std::move(dist2);
      rec.u             = std::move(u);
      rec.v             = std::move(v);
      rec.msg           = msg;
      rec.p             = std::move(p);
      rec.c             = c;
      rec.node_in       = std::move(node_in);
      rec.g             = std::move(g);
      rec.edges         = edges;
      rec.updated_nodes = updated;
    }

    hmat.leftCols(updated) += dh;
    x = std::move(x_next);
  }

  BasicDenoiserOutput<Scalar> out;
  const Mat<Scalar> h_lig = hmat.leftCols(n_lig);
  Mat<Scalar> feat = CMap<Scalar>(base + lay.w_out, kLigandTypes, h) * h_lig;
  feat.colwise() += CVMap<Scalar>(base + lay.b_out, kLigandTypes);
  out.eps_feat  = feat.transpose();
  out.eps_coord = project_com_free((x.leftCols(n_lig) - x0).transpose());
  if (tape) {
    tape->h_final = h_lig;
  }
  return out;
}

template <typename Scalar>
void backward(const BasicDenoiserParams<Scalar>& params, const BasicDenoiserTape<Scalar>& tape,
              const BasicDenoiserOutput<Scalar>& upstream, Eigen::Ref<Vec<Scalar>> grad) {
  const auto& lay      = params.layout();
  const Eigen::Index h = lay.config.hidden;
  const int n_lig      = tape.n_ligand;
  const int n_nodes    = tape.n_nodes;
  if (grad.size() != params.size()) {
    throw std::invalid_argument("denoiser backward: gradient vector has wrong size");
  }
  if (tape.layers.size() != lay.layers.size() || upstream.eps_coord.rows() != n_lig ||
      upstream.eps_feat.rows() != n_lig || upstream.eps_feat.cols() != kLigandTypes) {
    throw std::invalid_argument("denoiser backward: tape/upstream shape mismatch");
  }
  const Scalar* base   = params.values().data();
  Scalar* gbase        = grad.data();
  const Scalar inv_deg = n_nodes > 1 ? Scalar(1) / Scalar(n_nodes - 1) : Scalar(0);

  // Output heads.
  const Mat<Scalar> d_feat = upstream.eps_feat.transpose();  // K x n_lig
  MMap<Scalar>(gbase + lay.w_out, kLigandTypes, h).noalias() += d_feat * tape.h_final.transpose();
  MVMap<Scalar>(gbase + lay.b_out, kLigandTypes) += d_feat.rowwise().sum();

  Mat<Scalar> dh = Mat<Scalar>::Zero(h, n_nodes);
  dh.leftCols(n_lig).noalias() = CMap<Scalar>(base + lay.w_out, kLigandTypes, h).transpose() * d_feat;
  Mat3X<Scalar> dx = Mat3X<Scalar>::Zero(3, n_nodes);
  // Projection onto the centroid-free subspace is symmetric.
  dx.leftCols(n_lig) = project_com_free(upstream.eps_coord).transpose();

  for (std::size_t li = lay.layers.size(); li-- > 0;) {
    const auto& rec = tape.layers[li];
    const LayerView<Scalar, const Scalar*> w(base, lay.layers[li], h);
    LayerView<Scalar, Scalar*> gw(gbase, lay.layers[li], h);
    const Eigen::Index edges   = rec.edges;
    const Eigen::Index updated = rec.updated_nodes;
    const Eigen::Index lig_e   = tape.ligand_edges;

    // Node update h += Wn2 silu(Wn1 [h; agg] + bn1) + bn2.
    const Mat<Scalar> d_up = dh.leftCols(updated);
    const Mat<Scalar> s    = silu(rec.g);
    gw.w_node2.noalias() += d_up * s.transpose();
    gw.b_node2 += d_up.rowwise().sum();
    const Mat<Scalar> dg = (w.w_node2.transpose() * d_up).cwiseProduct(silu_grad(rec.g));
    gw.w_node1.noalias() += dg * rec.node_in.transpose();
    gw.b_node1 += dg.rowwise().sum();
    const Mat<Scalar> d_node_in = w.w_node1.transpose() * dg;
    dh.leftCols(updated) += d_node_in.topRows(h);
    const Mat<Scalar> d_agg = d_node_in.bottomRows(h) * inv_deg;

    // Coordinate update on ligand receivers.
    Vec<Scalar> dc(lig_e);
    Mat3X<Scalar> d_diff = Mat3X<Scalar>::Zero(3, edges);
    for (Eigen::Index e = 0; e < lig_e; ++e) {
      const auto dxi       = dx.col(tape.recv[e]);
      const Scalar r       = rec.dist(e);
      const Scalar soft    = Scalar(1) / (r + Scalar(1));
      const Scalar dot     = dxi.dot(rec.diff.col(e));
      dc(e)                = inv_deg * soft * dot;
      d_diff.col(e)        = dxi * (inv_deg * rec.c(e) * soft);
      if (r > Scalar(0)) {
        d_diff.col(e) -= rec.diff.col(e) * (inv_deg * rec.c(e) * dot * soft * soft / r);
      }
    }
    const Mat<Scalar> q = silu(rec.p);
    gw.w_coord2.noalias() += q * dc;
    gw.b_coord2 += dc.sum();
    const Mat<Scalar> dp = (w.w_coord2 * dc.transpose()).cwiseProduct(silu_grad(rec.p));
    gw.w_coord1.noalias() += dp * rec.msg.leftCols(lig_e).transpose();
    gw.b_coord1 += dp.rowwise().sum();

    Mat<Scalar> d_msg(h, edges);
    d_msg.leftCols(lig_e).noalias() = w.w_coord1.transpose() * dp;
    if (edges > lig_e) {
      d_msg.rightCols(edges - lig_e).setZero();
    }
    for (Eigen::Index e = 0; e < edges; ++e) {
      d_msg.col(e) += d_agg.col(tape.recv[e]);
    }

    // Edge MLP.
    const Mat<Scalar> dv = d_msg.cwiseProduct(silu_grad(rec.v));
    gw.w_edge2.noalias() += dv * silu(rec.u).transpose();
    gw.b_edge2 += dv.rowwise().sum();
    const Mat<Scalar> du = (w.w_edge2.transpose() * dv).cwiseProduct(silu_grad(rec.u));
    gw.w_dist += du * rec.dist2;
    gw.b_edge1 += du.rowwise().sum();
    const Vec<Scalar> d_dist2 = du.transpose() * w.w_dist;

    Mat<Scalar> da = Mat<Scalar>::Zero(h, updated);
    Mat<Scalar> db = Mat<Scalar>::Zero(h, n_nodes);
    for (Eigen::Index e = 0; e < edges; ++e) {
      const int i = tape.recv[e], j = tape.send[e];
      da.col(i) += du.col(e);
      db.col(j) += du.col(e);
      d_diff.col(e) += rec.diff.col(e) * (Scalar(2) * d_dist2(e));
      dx.col(i) += d_diff.col(e);
      dx.col(j) -= d_diff.col(e);
    }
    gw.w_recv.noalias() += da * rec.h.leftCols(updated).transpose();
    gw.w_send.noalias() += db * rec.h.transpose();
    dh.leftCols(updated).noalias() += w.w_recv.transpose() * da;
    dh.noalias() += w.w_send.transpose() * db;
  }

  MMap<Scalar>(gbase + lay.w_embed, h, kNodeInputDim).noalias() += dh * tape.node_input.transpose();
  MVMap<Scalar>(gbase + lay.b_embed, h) += dh.rowwise().sum();
}

template class BasicDenoiserParams<double>;
template DenoiserOutput forward<double>(const DenoiserParams&, const LigandCloud&, const PocketCloud&, int, int,
                                        DenoiserTape*);
template void backward<double>(const DenoiserParams&, const DenoiserTape&, const DenoiserOutput&,
                               Eigen::Ref<Eigen::VectorXd>);

}  // namespace pocketrl
