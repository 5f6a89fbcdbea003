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


#include "pocketrl/synthworld.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "pocketrl/geometry_io.hpp"

namespace pocketrl {

namespace {

constexpr int kPlacementTries = 200;
constexpr int kLigandRestarts = 50;

Eigen::RowVector3d random_unit(Rng& rng) {
  const double z   = 2.0 * rng.uniform() - 1.0;
  const double phi = 2.0 * std::numbers::pi * rng.uniform();
  const double r   = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

int draw_categorical(const Eigen::VectorXd& probs, Rng& rng) {
  const double u = rng.uniform() * probs.sum();
  double acc     = 0.0;
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    acc += probs(k);
    if (u < acc) {
      return static_cast<int>(k);
    }
  }
  return static_cast<int>(probs.size() - 1);
}

PocketCloud build_pocket(const WorldConfig& cfg, Rng& rng) {
  const int n = rng.uniform_int(cfg.pocket_size_min, cfg.pocket_size_max);
  // Per-pocket type mixture (flat Dirichlet) so pockets differ in composition.
  Eigen::VectorXd mix(kPocketTypes);
  for (int k = 0; k < kPocketTypes; ++k) {
    mix(k) = -std::log(1.0 - rng.uniform());
  }
  PocketCloud pocket;
  pocket.coords.resize(n, 3);
  pocket.types.resize(n);
  for (int i = 0; i < n; ++i) {
    // Uniform on the lower hemisphere z <= 0: the bowl opens toward +z.
    const double z   = -rng.uniform();
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    const double r   = std::sqrt(std::max(0.0, 1.0 - z * z));
    pocket.coords.row(i) = cfg.pocket_radius * Eigen::RowVector3d(r * std::cos(phi), r * std::sin(phi), z);
    pocket.types[i]      = draw_categorical(mix, rng);
  }
  return pocket;
}

bool try_build_ligand(const WorldConfig& cfg, int n, Rng& rng, Coords<double>& out) {
  const double limit = cfg.pocket_radius - kCavityMargin;
  out.resize(n, 3);
  out.row(0) = random_unit(rng) * (0.5 * limit * rng.uniform());
  for (int i = 1; i < n; ++i) {
    bool placed = false;
    for (int attempt = 0; attempt < kPlacementTries && !placed; ++attempt) {
      // Mostly extend the chain; sometimes branch off an earlier atom.
      const int parent = rng.uniform() < 0.75 ? i - 1 : rng.uniform_int(0, i - 1);
      const double bond = kBondMin + (kBondMax - kBondMin) * rng.uniform();
      const Eigen::RowVector3d cand = out.row(parent) + bond * random_unit(rng);
      if (cand.norm() > limit) {
        continue;
      }
      double nearest = std::numeric_limits<double>::infinity();
      for (int j = 0; j < i; ++j) {
        nearest = std::min(nearest, (out.row(j) - cand).norm());
      }
      if (nearest >= kBondMin) {
        out.row(i) = cand;
        placed     = true;
      }
    }
    if (!placed) {
      return false;
    }
  }
  return true;
}

}  // namespace

void WorldConfig::validate() const {
  if (!(pocket_radius > kCavityMargin) || !std::isfinite(pocket_radius)) {
    throw std::invalid_argument("WorldConfig: pocket_radius must exceed the cavity margin (1.0)");
  }
  if (n_pockets < 1) {
    throw std::invalid_argument("WorldConfig: n_pockets must be positive");
  }
  if (pocket_size_min < 1 || pocket_size_max < pocket_size_min) {
    throw std::invalid_argument("WorldConfig: empty pocket size range");
  }
  if (ligand_size_min < 1 || ligand_size_max < ligand_size_min) {
    throw std::invalid_argument("WorldConfig: empty ligand size range");
  }
}

Eigen::VectorXd type_histogram(const LigandCloud& ligand) {
  Eigen::VectorXd hist = Eigen::VectorXd::Zero(kLigandTypes);
  for (int type : ligand_types(ligand)) {
    hist(type) += 1.0;
  }
  return hist / static_cast<double>(std::max(1, ligand.size()));
}

Complex generate_complex(const WorldConfig& cfg, int index) {
  cfg.validate();
  if (index < 0 || index >= cfg.n_pockets) {
    throw std::out_of_range("generate_complex: index " + std::to_string(index) + " out of range");
  }
  Rng rng(Rng::derive(cfg.seed, static_cast<std::uint64_t>(index)));
  Complex out;
  out.pocket = build_pocket(cfg, rng);

  const int n_lig = rng.uniform_int(cfg.ligand_size_min, cfg.ligand_size_max);
  Coords<double> coords;
  bool ok = false;
  for (int attempt = 0; attempt < kLigandRestarts && !ok; ++attempt) {
    ok = try_build_ligand(cfg, n_lig, rng, coords);
  }
  if (!ok) {
    throw std::runtime_error("generate_complex: ligand placement failed for index " + std::to_string(index));
  }

  // Composition follows the pocket: 80% preferred types in pocket proportion,
  // 20% the type no pocket atom prefers.
  Eigen::VectorXd probs = Eigen::VectorXd::Zero(kLigandTypes);
  for (int type : out.pocket.types) {
    probs(preferred_ligand_type(type)) += 0.8 / out.pocket.size();
  }
  probs(kLigandTypes - 1) += 0.2;
  std::vector<int> types(n_lig);
  for (int i = 0; i < n_lig; ++i) {
    types[i] = draw_categorical(probs, rng);
  }
  out.ligand = make_clean_ligand(coords, types);
  return out;
}

World generate_world(const WorldConfig& cfg) {
  cfg.validate();
  World world{cfg, {}};
  world.complexes.reserve(cfg.n_pockets);
  for (int i = 0; i < cfg.n_pockets; ++i) {
    world.complexes.push_back(generate_complex(cfg, i));
  }
  return world;
}

Eigen::VectorXd target_histogram(const std::vector<Complex>& complexes) {
  if (complexes.empty()) {
    throw std::invalid_argument("target_histogram: no complexes");
  }
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(kLigandTypes);
  for (const auto& c : complexes) {
    acc += type_histogram(c.ligand);
  }
  return acc / static_cast<double>(complexes.size());
}

SizeSampler SizeSampler::from_complexes(const std::vector<Complex>& complexes) {
  std::map<int, std::map<int, long>> counts;
  for (const auto& c : complexes) {
    ++counts[c.pocket.size()][c.ligand.size()];
  }
  return from_counts(std::move(counts));
}

SizeSampler SizeSampler::from_counts(std::map<int, std::map<int, long>> counts) {
  SizeSampler out;
  for (auto& [np, hist] : counts) {
    long total = 0;
    for (const auto& [nm, c] : hist) {
      if (c < 0 || nm < 1) {
        throw std::invalid_argument("SizeSampler: invalid histogram entry");
      }
      total += c;
    }
    if (total > 0) {
      out.counts_[np] = std::move(hist);
    }
  }
  return out;
}

int SizeSampler::nearest_bucket(int n_pocket) const {
  if (counts_.empty()) {
    throw std::logic_error("SizeSampler: empty sampler");
  }
  int best = counts_.begin()->first;
  for (const auto& [np, hist] : counts_) {
    if (std::abs(np - n_pocket) < std::abs(best - n_pocket)) {
      best = np;
    }
  }
  return best;
}

std::map<int, double> SizeSampler::conditional(int n_pocket) const {
  const auto& hist = counts_.at(nearest_bucket(n_pocket));
  long total = 0;
  for (const auto& [nm, c] : hist) {
    total += c;
  }
  std::map<int, double> out;
  for (const auto& [nm, c] : hist) {
    out[nm] = static_cast<double>(c) / static_cast<double>(total);
  }
  return out;
}

int SizeSampler::sample(int n_pocket, Rng& rng) const {
  const auto& hist = counts_.at(nearest_bucket(n_pocket));
  long total = 0;
  for (const auto& [nm, c] : hist) {
    total += c;
  }
  const double u = rng.uniform() * static_cast<double>(total);
  double acc     = 0.0;
  int last       = hist.begin()->first;
  for (const auto& [nm, c] : hist) {
    if (c == 0) {
      continue;
    }
    acc += static_cast<double>(c);
    last = nm;
    if (u < acc) {
      return nm;
    }
  }
  return last;
}

void save_world(const std::filesystem::path& dir, const World& world) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < world.complexes.size(); ++i) {
    const auto sub = dir / std::to_string(i);
    std::filesystem::create_directories(sub);
    save_xyz(sub / "pocket.xyz", world.complexes[i].pocket);
    save_xyz(sub / "ligand.xyz", world.complexes[i].ligand);
  }
  const auto& cfg = world.config;
  nlohmann::ordered_json meta;
  meta["config"] = {{"pocket_radius", cfg.pocket_radius},     {"n_pockets", cfg.n_pockets},
                    {"pocket_size_min", cfg.pocket_size_min}, {"pocket_size_max", cfg.pocket_size_max},
                    {"ligand_size_min", cfg.ligand_size_min}, {"ligand_size_max", cfg.ligand_size_max},
                    {"seed", cfg.seed}};
  nlohmann::ordered_json sizes = nlohmann::ordered_json::object();
  const SizeSampler sampler = SizeSampler::from_complexes(world.complexes);
  for (const auto& [np, hist] : sampler.counts()) {
    nlohmann::ordered_json row = nlohmann::ordered_json::object();
    for (const auto& [nm, c] : hist) {
      row[std::to_string(nm)] = c;
    }
    sizes[std::to_string(np)] = row;
  }
  meta["size_histogram"] = sizes;
  const Eigen::VectorXd target = target_histogram(world.complexes);
  meta["target_histogram"] = std::vector<double>(target.data(), target.data() + target.size());
  std::ofstream os(dir / "meta.json", std::ios::binary);
  if (!os) {
    throw std::runtime_error("save_world: cannot write " + (dir / "meta.json").string());
  }
  os << meta.dump(2) << '\n';
}

World load_world(const std::filesystem::path& dir) {
  std::ifstream is(dir / "meta.json", std::ios::binary);
  if (!is) {
    throw std::runtime_error("load_world: missing " + (dir / "meta.json").string());
  }
  World world;
  try {
    const auto meta = nlohmann::json::parse(is);
    const auto& c   = meta.at("config");
    WorldConfig& cfg = world.config;
    cfg.pocket_radius   = c.at("pocket_radius").get<double>();
    cfg.n_pockets       = c.at("n_pockets").get<int>();
    cfg.pocket_size_min = c.at("pocket_size_min").get<int>();
    cfg.pocket_size_max = c.at("pocket_size_max").get<int>();
    cfg.ligand_size_min = c.at("ligand_size_min").get<int>();
    cfg.ligand_size_max = c.at("ligand_size_max").get<int>();
    cfg.seed            = c.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("load_world: malformed meta.json: ") + e.what());
  }
  world.config.validate();
  for (int i = 0; i < world.config.n_pockets; ++i) {
    const auto sub = dir / std::to_string(i);
    world.complexes.push_back({load_pocket_xyz(sub / "pocket.xyz"), load_ligand_xyz(sub / "ligand.xyz")});
  }
  return world;
}

}  // namespace pocketrl
