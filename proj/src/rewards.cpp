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


#include "pocketrl/rewards.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

#include "pocketrl/synthworld.hpp"

namespace pocketrl {

namespace {

// Union-find over the distance graph; returns component sizes.
std::vector<int> component_sizes(const Eigen::MatrixXd& dist) {
  const int n = static_cast<int>(dist.rows());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&parent](int i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i         = parent[i];
    }
    return i;
  };
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (dist(i, j) <= kBondCutoff) {
        parent[find(i)] = find(j);
      }
    }
  }
  std::vector<int> sizes(n, 0);
  for (int i = 0; i < n; ++i) {
    ++sizes[find(i)];
  }
  return sizes;
}

double lj_pair(double r) {
  if (r > kAffinityCutoff) {
    return 0.0;
  }
  if (r < 1e-6) {
    return 10.0;
  }
  const double inv6 = std::pow(1.0 / r, 6);
  return std::clamp(4.0 * (inv6 * inv6 - inv6), -1.0, 10.0);
}

double population_std(const Eigen::VectorXd& v) {
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().mean());
}

}  // namespace

double oracle_affinity(const LigandCloud& ligand, const PocketCloud& pocket) {
  const std::vector<int> types = ligand_types(ligand);
  double total                 = 0.0;
  for (int i = 0; i < ligand.size(); ++i) {
    for (int p = 0; p < pocket.size(); ++p) {
      const double r = (ligand.coords.row(i) - pocket.coords.row(p)).norm();
      total += lj_pair(r);
      if (r < kContactDistance && types[i] == preferred_ligand_type(pocket.types[p])) {
        total += kContactBonus;
      }
    }
  }
  return total;
}

double oracle_qed_like(const LigandCloud& ligand, const Eigen::VectorXd& target) {
  if (target.size() != kLigandTypes) {
    throw std::invalid_argument("oracle_qed_like: target histogram has the wrong length");
  }
  const double tv   = 0.5 * (type_histogram(ligand) - target).cwiseAbs().sum();
  const double size = std::abs(ligand.size() - kTargetLigandSize) / static_cast<double>(kTargetLigandSize);
  return std::clamp(1.0 - 0.5 * tv - 0.5 * size, 0.0, 1.0);
}

double connected_fraction(const LigandCloud& ligand) {
  if (ligand.size() == 0) {
    return 0.0;
  }
  const std::vector<int> sizes = component_sizes(pairwise_distances(ligand.coords));
  return *std::max_element(sizes.begin(), sizes.end()) / static_cast<double>(ligand.size());
}

double oracle_sa_like(const LigandCloud& ligand) {
  const int n = ligand.size();
  if (n < 1) {
    return 0.0;
  }
  const Eigen::MatrixXd dist = pairwise_distances(ligand.coords);
  double variance            = 0.0;
  if (n > 1) {
    Eigen::VectorXd nearest(n);
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < n; ++j) {
        if (j != i) {
          best = std::min(best, dist(i, j));
        }
      }
      nearest(i) = best;
    }
    variance = (nearest.array() - nearest.mean()).square().mean();
  }
  const std::vector<int> sizes = component_sizes(dist);
  const double fraction        = *std::max_element(sizes.begin(), sizes.end()) / static_cast<double>(n);
  return std::exp(-variance) * fraction;
}

bool oracle_validity(const LigandCloud& ligand) {
  const int n = ligand.size();
  if (n < 1 || !ligand.coords.allFinite()) {
    return false;
  }
  const Eigen::MatrixXd dist = pairwise_distances(ligand.coords);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (dist(i, j) < kMinSeparation) {
        return false;
      }
    }
  }
  const std::vector<int> sizes = component_sizes(dist);
  return *std::max_element(sizes.begin(), sizes.end()) == n;
}

Eigen::VectorXd descriptor(const LigandCloud& ligand) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(kDescriptorSize);
  out.head(kLigandTypes) = type_histogram(ligand);
  const int n = ligand.size();
  if (n > 1) {
    Eigen::VectorXd bins = Eigen::VectorXd::Zero(kDistanceBins);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        const double r = (ligand.coords.row(i) - ligand.coords.row(j)).norm();
        const int bin  = std::clamp(static_cast<int>(r / kDistanceRange * kDistanceBins), 0, kDistanceBins - 1);
        bins(bin) += 1.0;
      }
    }
    out.tail(kDistanceBins) = bins / bins.sum();
  }
  return out;
}

OracleRegistry OracleRegistry::with_defaults(const Eigen::VectorXd& target_histogram) {
  OracleRegistry reg;
  reg.add("affinity", std::make_shared<FunctionOracle>(
                          [](const LigandCloud& l, const PocketCloud& p) { return oracle_affinity(l, p); },
                          Direction::kMinimize));
  reg.add("qed", std::make_shared<FunctionOracle>(
                     [target_histogram](const LigandCloud& l, const PocketCloud&) {
                       return oracle_qed_like(l, target_histogram);
                     },
                     Direction::kMaximize));
  reg.add("sa", std::make_shared<FunctionOracle>(
                    [](const LigandCloud& l, const PocketCloud&) { return oracle_sa_like(l); }, Direction::kMaximize));
  return reg;
}

void OracleRegistry::add(const std::string& name, std::shared_ptr<const Oracle> oracle) {
  if (name.empty() || name == kDiversityObjective) {
    throw std::invalid_argument("OracleRegistry: reserved or empty oracle name '" + name + "'");
  }
  if (!oracle) {
    throw std::invalid_argument("OracleRegistry: null oracle for '" + name + "'");
  }
  oracles_[name] = std::move(oracle);
}

const Oracle& OracleRegistry::get(const std::string& name) const {
  const auto it = oracles_.find(name);
  if (it == oracles_.end()) {
    throw std::invalid_argument("OracleRegistry: unknown oracle '" + name + "'");
  }
  return *it->second;
}

std::vector<std::string> OracleRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, oracle] : oracles_) {
    out.push_back(name);
  }
  return out;
}

OracleVector evaluate_oracles(const LigandCloud& ligand, const PocketCloud& pocket,
                              const Eigen::VectorXd& target_histogram) {
  OracleVector out;
  out.affinity   = oracle_affinity(ligand, pocket);
  out.qed_like   = oracle_qed_like(ligand, target_histogram);
  out.sa_like    = oracle_sa_like(ligand);
  out.descriptor = descriptor(ligand);
  out.valid      = oracle_validity(ligand) && std::isfinite(out.affinity) && std::isfinite(out.qed_like) &&
              std::isfinite(out.sa_like) && out.descriptor.allFinite();
  return out;
}

Eigen::VectorXd gaussian_rank_transform(const Eigen::VectorXd& values) {
  const Eigen::Index n = values.size();
  if (n < 1) {
    throw std::invalid_argument("gaussian_rank_transform: empty input");
  }
  if (!values.allFinite()) {
    throw std::invalid_argument("gaussian_rank_transform: non-finite input");
  }
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&values](Eigen::Index a, Eigen::Index b) { return values(a) < values(b); });
  const boost::math::normal_distribution<double> normal;
  Eigen::VectorXd out(n);
  for (Eigen::Index lo = 0; lo < n;) {
    Eigen::Index hi = lo + 1;
    while (hi < n && values(order[hi]) == values(order[lo])) {
      ++hi;
    }
    // Ranks lo+1 .. hi share their mean.
    const double rank = 0.5 * static_cast<double>(lo + 1 + hi);
    const double q    = boost::math::quantile(normal, (rank - 0.5) / static_cast<double>(n));
    for (Eigen::Index k = lo; k < hi; ++k) {
      out(order[k]) = q;
    }
    lo = hi;
  }
  return out;
}

namespace {

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0.0 || nb == 0.0) {
    return 0.0;
  }
  return a.dot(b) / (na * nb);
}

// Bits above the median bin value.
std::vector<bool> binarize(const Eigen::VectorXd& d) {
  std::vector<double> sorted(d.data(), d.data() + d.size());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  const double median = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  std::vector<bool> bits(m);
  for (std::size_t k = 0; k < m; ++k) {
    bits[k] = d(static_cast<Eigen::Index>(k)) > median;
  }
  return bits;
}

double tanimoto(const std::vector<bool>& a, const std::vector<bool>& b) {
  int both = 0, either = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    both += a[k] && b[k];
    either += a[k] || b[k];
  }
  return either == 0 ? 1.0 : static_cast<double>(both) / either;
}

}  // namespace

Eigen::VectorXd diversity_scores(const std::vector<Eigen::VectorXd>& descriptors, DiversityMode mode) {
  const Eigen::Index n = static_cast<Eigen::Index>(descriptors.size());
  Eigen::VectorXd out  = Eigen::VectorXd::Zero(n);
  if (n < 2) {
    return out;
  }
  for (const auto& d : descriptors) {
    if (d.size() != descriptors.front().size()) {
      throw std::invalid_argument("diversity_scores: descriptor lengths differ");
    }
  }
  Eigen::MatrixXd sim = Eigen::MatrixXd::Zero(n, n);
  if (mode == DiversityMode::kCosine) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        sim(i, j) = sim(j, i) = cosine(descriptors[i], descriptors[j]);
      }
    }
  } else {
    std::vector<std::vector<bool>> bits;
    for (const auto& d : descriptors) {
      bits.push_back(binarize(d));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) {
        sim(i, j) = sim(j, i) = tanimoto(bits[i], bits[j]);
      }
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    out(i) = 1.0 - sim.row(i).sum() / static_cast<double>(n - 1);
  }
  return out;
}

Eigen::VectorXd composite_reward(const Eigen::MatrixXd& transformed, const Eigen::VectorXd& weights) {
  if (transformed.cols() != weights.size()) {
    throw std::invalid_argument("composite_reward: weight vector length does not match objectives");
  }
  return transformed * weights;
}

double invalid_penalty(const Eigen::VectorXd& valid_rewards) {
  if (valid_rewards.size() == 0) {
    return kNoValidPenalty;
  }
  return valid_rewards.mean() - 3.0 * population_std(valid_rewards);
}

RewardBatch score_batch(const std::vector<LigandCloud>& ligands, const std::vector<OracleVector>& oracles,
                        const PocketCloud& pocket, const OracleRegistry& registry, const RewardConfig& cfg) {
  const Eigen::Index n = static_cast<Eigen::Index>(ligands.size());
  if (static_cast<Eigen::Index>(oracles.size()) != n) {
    throw std::invalid_argument("score_batch: one oracle vector per ligand required");
  }
  RewardBatch batch;
  batch.oracles = oracles;
  std::vector<double> weights;
  bool use_diversity = false;
  double diversity_weight = 0.0;
  for (const auto& [name, w] : cfg.weights) {
    if (!std::isfinite(w)) {
      throw std::invalid_argument("score_batch: non-finite weight for '" + name + "'");
    }
    if (name == kDiversityObjective) {
      use_diversity    = true;
      diversity_weight = w;
      continue;
    }
    registry.get(name);  // throws on unknown names
    batch.objectives.push_back(name);
    weights.push_back(w);
  }
  if (use_diversity) {
    batch.objectives.push_back(kDiversityObjective);
    weights.push_back(diversity_weight);
  }
  const Eigen::Index m = static_cast<Eigen::Index>(batch.objectives.size());
  const Eigen::Index n_plugin = use_diversity ? m - 1 : m;

  std::vector<bool> valid(n);
  batch.raw = Eigen::MatrixXd::Zero(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    valid[i] = oracles[i].valid;
    for (Eigen::Index k = 0; k < n_plugin; ++k) {
      double v = std::numeric_limits<double>::quiet_NaN();
      try {
        v = registry.get(batch.objectives[k]).evaluate(ligands[i], pocket);
      } catch (const std::exception&) {
        // An oracle failure marks the ligand invalid rather than aborting.
      }
      if (!std::isfinite(v)) {
        valid[i] = false;
        v        = 0.0;
      }
      batch.raw(i, k) = v;
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    batch.oracles[i].valid = valid[i];
  }

  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (valid[i]) {
      rows.push_back(i);
    }
  }
  const Eigen::Index nv = static_cast<Eigen::Index>(rows.size());
  batch.n_valid         = static_cast<int>(nv);
  batch.diversity       = Eigen::VectorXd::Zero(n);
  if (use_diversity && nv > 0) {
    std::vector<Eigen::VectorXd> desc;
    for (Eigen::Index r : rows) {
      desc.push_back(oracles[r].descriptor);
    }
    const Eigen::VectorXd div = diversity_scores(desc, cfg.diversity_mode);
    for (Eigen::Index k = 0; k < nv; ++k) {
      batch.diversity(rows[k]) = div(k);
      batch.raw(rows[k], m - 1) = div(k);
    }
  }

  batch.transformed = Eigen::MatrixXd::Zero(n, m);
  batch.composite   = Eigen::VectorXd::Zero(n);
  if (nv > 0) {
    Eigen::MatrixXd sub(nv, m);
    for (Eigen::Index k = 0; k < m; ++k) {
      Eigen::VectorXd column(nv);
      const bool minimize = k < n_plugin && registry.get(batch.objectives[k]).direction() == Direction::kMinimize;
      for (Eigen::Index r = 0; r < nv; ++r) {
        column(r) = minimize ? -batch.raw(rows[r], k) : batch.raw(rows[r], k);
      }
      sub.col(k) = gaussian_rank_transform(column);
    }
    const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(weights.data(), m);
    const Eigen::VectorXd valid_composite = composite_reward(sub, w);
    for (Eigen::Index r = 0; r < nv; ++r) {
      batch.transformed.row(rows[r]) = sub.row(r);
      batch.composite(rows[r])       = valid_composite(r);
    }
    batch.penalty = invalid_penalty(valid_composite);
  } else {
    batch.penalty = kNoValidPenalty;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!valid[i]) {
      batch.composite(i) = batch.penalty;
    }
  }
  return batch;
}

Eigen::VectorXd zscore(const Eigen::VectorXd& values) {
  if (values.size() == 0) {
    return values;
  }
  const double sd = population_std(values);
  return (values.array() - values.mean()) / (sd + kStdGuard);
}

Eigen::VectorXd topn_scores(const Eigen::VectorXd& affinity, const Eigen::VectorXd& qed, const Eigen::VectorXd& sa) {
  if (affinity.size() != qed.size() || affinity.size() != sa.size()) {
    throw std::invalid_argument("topn_scores: objective lengths differ");
  }
  return 5.0 * zscore(affinity.cwiseAbs()) + zscore(qed) + 1.5 * zscore(sa);
}

}  // namespace pocketrl
