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

#ifndef POCKETRL_GEOMETRY_HPP
#define POCKETRL_GEOMETRY_HPP

#include <Eigen/Core>
#include <Eigen/LU>
#include <Eigen/QR>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

namespace pocketrl {

//! Pocket atom-type alphabet size.
inline constexpr int kPocketTypes = 4;
//! Ligand atom-type alphabet size.
inline constexpr int kLigandTypes = 5;
//! Scale applied to one-hot ligand type features before diffusion.
inline constexpr double kFeatureScale = 0.25;

template <typename Scalar>
using Coords = Eigen::Matrix<Scalar, Eigen::Dynamic, 3>;
template <typename Scalar>
using FeatureMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

//! Protein binding-site point cloud. Coordinates are rows.
template <typename Scalar>
struct BasicPocketCloud {
  Coords<Scalar> coords;
  std::vector<int> types;

  int size() const { return static_cast<int>(coords.rows()); }

  bool operator==(const BasicPocketCloud& other) const {
    return types == other.types && coords.rows() == other.coords.rows() && coords == other.coords;
  }

  FeatureMatrix<Scalar> one_hot() const {
    FeatureMatrix<Scalar> out = FeatureMatrix<Scalar>::Zero(size(), kPocketTypes);
    for (int i = 0; i < size(); ++i) {
      out(i, types[i]) = Scalar(1);
    }
    return out;
  }

  void validate() const {
    if (coords.rows() < 1) {
      throw std::invalid_argument("pocket must contain at least one atom");
    }
    if (static_cast<Eigen::Index>(types.size()) != coords.rows()) {
      throw std::invalid_argument("pocket types/coords size mismatch");
    }
    if (!coords.allFinite()) {
      throw std::invalid_argument("pocket coordinates must be finite");
    }
    for (int type : types) {
      if (type < 0 || type >= kPocketTypes) {
        throw std::invalid_argument("pocket atom type out of range");
      }
    }
  }
};

//! Ligand point cloud. Clean ligands carry one-hot types scaled by
//! kFeatureScale; noisy diffusion states carry unconstrained features.
template <typename Scalar>
struct BasicLigandCloud {
  Coords<Scalar> coords;
  FeatureMatrix<Scalar> features;

  int size() const { return static_cast<int>(coords.rows()); }
  int feature_dim() const { return static_cast<int>(features.cols()); }

  bool operator==(const BasicLigandCloud& other) const {
    return coords.rows() == other.coords.rows() && features.rows() == other.features.rows() &&
           features.cols() == other.features.cols() && coords == other.coords && features == other.features;
  }
};

using PocketCloud = BasicPocketCloud<double>;
using LigandCloud = BasicLigandCloud<double>;

template <typename Scalar>
BasicLigandCloud<Scalar> make_clean_ligand(const Coords<Scalar>& coords, const std::vector<int>& types) {
  if (static_cast<Eigen::Index>(types.size()) != coords.rows() || coords.rows() < 1) {
    throw std::invalid_argument("make_clean_ligand: need one type per atom and at least one atom");
  }
  BasicLigandCloud<Scalar> out;
  out.coords   = coords;
  out.features = FeatureMatrix<Scalar>::Zero(coords.rows(), kLigandTypes);
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    if (types[i] < 0 || types[i] >= kLigandTypes) {
      throw std::invalid_argument("make_clean_ligand: ligand type out of range");
    }
    out.features(i, types[i]) = Scalar(kFeatureScale);
  }
  return out;
}

//! Row-wise argmax of the feature matrix; ties resolve to the lowest index.
template <typename Scalar>
std::vector<int> ligand_types(const BasicLigandCloud<Scalar>& ligand) {
  std::vector<int> types(ligand.size());
  for (int i = 0; i < ligand.size(); ++i) {
    int best = 0;
    for (int k = 1; k < ligand.feature_dim(); ++k) {
      if (ligand.features(i, k) > ligand.features(i, best)) {
        best = k;
      }
    }
    types[i] = best;
  }
  return types;
}

//! Subtracts the per-column mean. Linear and idempotent.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Derived::ColsAtCompileTime>
project_com_free(const Eigen::MatrixBase<Derived>& m) {
  if (m.rows() < 1) {
    throw std::invalid_argument("project_com_free: empty input");
  }
  return m.rowwise() - m.colwise().mean();
}

//! Translates the complex so that the ligand centroid sits at the origin.
//! Atoms have uniform mass.
template <typename Scalar>
std::pair<BasicPocketCloud<Scalar>, BasicLigandCloud<Scalar>> center_on_ligand(
    const BasicPocketCloud<Scalar>& pocket, const BasicLigandCloud<Scalar>& ligand) {
  if (pocket.size() < 1 || ligand.size() < 1) {
    throw std::invalid_argument("center_on_ligand: clouds must be non-empty");
  }
  const Eigen::Matrix<Scalar, 1, 3> com = ligand.coords.colwise().mean();
  std::pair<BasicPocketCloud<Scalar>, BasicLigandCloud<Scalar>> out{pocket, ligand};
  out.first.coords.rowwise() -= com;
  out.second.coords.rowwise() -= com;
  return out;
}

//! Orthogonal 3x3 transform (rotation or rotation-reflection).
template <typename Scalar>
class BasicO3Transform {
 public:
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;

  BasicO3Transform() : rotation_(Matrix3::Identity()) {}

  //! Throws std::invalid_argument unless R^T R = I within tol.
  static BasicO3Transform from_matrix(const Matrix3& r, Scalar tol = Scalar(1e-10)) {
    if (!r.allFinite() || (r.transpose() * r - Matrix3::Identity()).cwiseAbs().maxCoeff() > tol) {
      throw std::invalid_argument("O3Transform: matrix is not orthogonal");
    }
    BasicO3Transform out;
    out.rotation_ = r;
    return out;
  }

  const Matrix3& rotation() const { return rotation_; }
  Scalar determinant() const { return rotation_.determinant(); }

 private:
  Matrix3 rotation_;
};

using O3Transform = BasicO3Transform<double>;

//! Applies x -> R x to every row.
template <typename Scalar, typename Derived>
Coords<Scalar> apply_o3(const BasicO3Transform<Scalar>& tf, const Eigen::MatrixBase<Derived>& coords) {
  return coords * tf.rotation().transpose();
}

//! Haar-distributed orthogonal matrix; proper and improper with equal probability.
O3Transform sample_random_o3(std::uint64_t seed);

//! Applies a row permutation: out.row(i) = in.row(perm[i]).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Derived::ColsAtCompileTime> permute_rows(
    const Eigen::MatrixBase<Derived>& in, const std::vector<int>& perm) {
  if (static_cast<Eigen::Index>(perm.size()) != in.rows()) {
    throw std::invalid_argument("permute_rows: permutation size mismatch");
  }
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Derived::ColsAtCompileTime> out(in.rows(), in.cols());
  for (Eigen::Index i = 0; i < in.rows(); ++i) {
    out.row(i) = in.row(perm[i]);
  }
  return out;
}

//! Symmetric matrix of Euclidean distances between rows.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> pairwise_distances(const Coords<Scalar>& coords) {
  const Eigen::Index n = coords.rows();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = Scalar(0);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      d(i, j) = d(j, i) = (coords.row(i) - coords.row(j)).norm();
    }
  }
  return d;
}

}  // namespace pocketrl

#endif  // POCKETRL_GEOMETRY_HPP
