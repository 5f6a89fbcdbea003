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


#include "pocketrl/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <vector>

#include <json.hpp>

namespace pocketrl {

namespace {

using nlohmann::ordered_json;

void reject_unknown(const ordered_json& obj, const std::string& where, std::initializer_list<const char*> known) {
  if (!obj.is_object()) {
    throw ConfigError("config: '" + where + "' must be an object");
  }
  const std::set<std::string> allowed(known.begin(), known.end());
  for (const auto& item : obj.items()) {
    if (!allowed.count(item.key())) {
      throw ConfigError("config: unknown key '" + where + "." + item.key() + "'");
    }
  }
}

template <typename T>
void read(const ordered_json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) {
    return;
  }
  const auto& v = obj.at(key);
  bool ok       = false;
  if constexpr (std::is_same_v<T, bool>) {
    ok = v.is_boolean();
  } else if constexpr (std::is_integral_v<T>) {
    ok = v.is_number_integer();
    if (ok && std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) {
      ok = false;
    }
  } else if constexpr (std::is_floating_point_v<T>) {
    ok = v.is_number();
  } else {
    ok = v.is_string();
  }
  if (!ok) {
    throw ConfigError("config: wrong type for '" + where + "." + key + "'");
  }
  out = v.get<T>();
}

const char* mode_name(DiversityMode mode) { return mode == DiversityMode::kCosine ? "cosine" : "tanimoto"; }

}  // namespace

void RunConfig::validate() const {
  try {
    world.validate();
    if (schedule.T < 2 || !(schedule.precision > 0.0 && schedule.precision < 0.5)) {
      throw std::invalid_argument("schedule: need T >= 2 and 0 < precision < 0.5");
    }
    DenoiserLayout{denoiser};
    pretrain.validate();
    ppo.validate(schedule.T);
    if (sample.n < 1 || sample.stride < 1 || sample.stride > schedule.T) {
      throw std::invalid_argument("sample: need n >= 1 and 1 <= stride <= T");
    }
    if (pocket_index < 0 || pocket_index >= world.n_pockets) {
      throw std::invalid_argument("pocket_index out of range");
    }
    if (rewards.weights.empty()) {
      throw std::invalid_argument("rewards: empty weight map");
    }
    for (const auto& [name, w] : rewards.weights) {
      if (!std::isfinite(w)) {
        throw std::invalid_argument("rewards: non-finite weight for '" + name + "'");
      }
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

std::string to_json(const RunConfig& c) {
  ordered_json j;
  j["world"] = {{"pocket_radius", c.world.pocket_radius},     {"n_pockets", c.world.n_pockets},
                {"pocket_size_min", c.world.pocket_size_min}, {"pocket_size_max", c.world.pocket_size_max},
                {"ligand_size_min", c.world.ligand_size_min}, {"ligand_size_max", c.world.ligand_size_max},
                {"seed", c.world.seed}};
  j["schedule"] = {{"T", c.schedule.T}, {"precision", c.schedule.precision}};
  j["denoiser"] = {{"layers", c.denoiser.layers},
                   {"hidden", c.denoiser.hidden},
                   {"pocket_messages", c.denoiser.pocket_messages}};
  j["pretrain"] = {{"steps", c.pretrain.steps},
                   {"batch_size", c.pretrain.batch_size},
                   {"learning_rate", c.pretrain.learning_rate},
                   {"weight_decay", c.pretrain.weight_decay}};
  j["ppo"] = {{"clip_eps", c.ppo.clip_eps},         {"learning_rate", c.ppo.learning_rate},
              {"weight_decay", c.ppo.weight_decay}, {"batch_size", c.ppo.batch_size},
              {"n_updates", c.ppo.n_updates},       {"stride", c.ppo.stride},
              {"epochs_per_batch", c.ppo.epochs_per_batch}, {"checkpoint_every", c.ppo.checkpoint_every},
              {"round_robin", c.ppo.round_robin}};
  ordered_json weights = ordered_json::object();
  for (const auto& [name, w] : c.rewards.weights) {
    weights[name] = w;
  }
  j["rewards"]      = {{"weights", weights}, {"diversity_mode", mode_name(c.rewards.diversity_mode)}};
  j["sample"]       = {{"n", c.sample.n}, {"stride", c.sample.stride}};
  j["pocket_index"] = c.pocket_index;
  j["seed"]         = c.seed;
  j["out_dir"]      = c.out_dir;
  return j.dump(2) + "\n";
}

RunConfig from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  RunConfig c;
  reject_unknown(j, "", {"world", "schedule", "denoiser", "pretrain", "ppo", "rewards", "sample", "pocket_index",
                         "seed", "out_dir"});
  if (j.contains("world")) {
    const auto& w = j["world"];
    reject_unknown(w, "world", {"pocket_radius", "n_pockets", "pocket_size_min", "pocket_size_max",
                                "ligand_size_min", "ligand_size_max", "seed"});
    read(w, "pocket_radius", c.world.pocket_radius, "world");
    read(w, "n_pockets", c.world.n_pockets, "world");
    read(w, "pocket_size_min", c.world.pocket_size_min, "world");
    read(w, "pocket_size_max", c.world.pocket_size_max, "world");
    read(w, "ligand_size_min", c.world.ligand_size_min, "world");
    read(w, "ligand_size_max", c.world.ligand_size_max, "world");
    read(w, "seed", c.world.seed, "world");
  }
  if (j.contains("schedule")) {
    const auto& s = j["schedule"];
    reject_unknown(s, "schedule", {"T", "precision"});
    read(s, "T", c.schedule.T, "schedule");
    read(s, "precision", c.schedule.precision, "schedule");
  }
  if (j.contains("denoiser")) {
    const auto& d = j["denoiser"];
    reject_unknown(d, "denoiser", {"layers", "hidden", "pocket_messages"});
    read(d, "layers", c.denoiser.layers, "denoiser");
    read(d, "hidden", c.denoiser.hidden, "denoiser");
    read(d, "pocket_messages", c.denoiser.pocket_messages, "denoiser");
  }
  if (j.contains("pretrain")) {
    const auto& p = j["pretrain"];
    reject_unknown(p, "pretrain", {"steps", "batch_size", "learning_rate", "weight_decay"});
    read(p, "steps", c.pretrain.steps, "pretrain");
    read(p, "batch_size", c.pretrain.batch_size, "pretrain");
    read(p, "learning_rate", c.pretrain.learning_rate, "pretrain");
    read(p, "weight_decay", c.pretrain.weight_decay, "pretrain");
  }
  if (j.contains("ppo")) {
    const auto& p = j["ppo"];
    reject_unknown(p, "ppo", {"clip_eps", "learning_rate", "weight_decay", "batch_size", "n_updates", "stride",
                              "epochs_per_batch", "checkpoint_every", "round_robin"});
    read(p, "clip_eps", c.ppo.clip_eps, "ppo");
    read(p, "learning_rate", c.ppo.learning_rate, "ppo");
    read(p, "weight_decay", c.ppo.weight_decay, "ppo");
    read(p, "batch_size", c.ppo.batch_size, "ppo");
    read(p, "n_updates", c.ppo.n_updates, "ppo");
    read(p, "stride", c.ppo.stride, "ppo");
    read(p, "epochs_per_batch", c.ppo.epochs_per_batch, "ppo");
    read(p, "checkpoint_every", c.ppo.checkpoint_every, "ppo");
    read(p, "round_robin", c.ppo.round_robin, "ppo");
  }
  if (j.contains("rewards")) {
    const auto& r = j["rewards"];
    reject_unknown(r, "rewards", {"weights", "diversity_mode"});
    if (r.contains("weights")) {
      const auto& w = r["weights"];
      if (!w.is_object()) {
        throw ConfigError("config: 'rewards.weights' must be an object");
      }
      c.rewards.weights.clear();
      for (const auto& item : w.items()) {
        if (!item.value().is_number()) {
          throw ConfigError("config: wrong type for 'rewards.weights." + item.key() + "'");
        }
        c.rewards.weights[item.key()] = item.value().get<double>();
      }
    }
    std::string mode = mode_name(c.rewards.diversity_mode);
    read(r, "diversity_mode", mode, "rewards");
    if (mode == "cosine") {
      c.rewards.diversity_mode = DiversityMode::kCosine;
    } else if (mode == "tanimoto") {
      c.rewards.diversity_mode = DiversityMode::kTanimoto;
    } else {
      throw ConfigError("config: rewards.diversity_mode must be 'cosine' or 'tanimoto'");
    }
  }
  if (j.contains("sample")) {
    const auto& s = j["sample"];
    reject_unknown(s, "sample", {"n", "stride"});
    read(s, "n", c.sample.n, "sample");
    read(s, "stride", c.sample.stride, "sample");
  }
  read(j, "pocket_index", c.pocket_index, "");
  read(j, "seed", c.seed, "");
  read(j, "out_dir", c.out_dir, "");
  c.validate();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw ConfigError("config: cannot read " + path.string());
  }
  std::ostringstream ss;
  ss << is.rdbuf();
  return from_json(ss.str());
}

std::uint64_t fnv1a64(const std::string& bytes, std::uint64_t h) {
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string digest_tree(const std::filesystem::path& root) {
  std::vector<std::filesystem::path> files;
  if (std::filesystem::is_regular_file(root)) {
    files.push_back(root);
  } else {
    for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
      if (entry.is_regular_file()) {
        files.push_back(entry.path());
      }
    }
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& f : files) {
    const std::string rel = std::filesystem::is_regular_file(root) ? f.filename().string()
                                                                   : std::filesystem::relative(f, root).generic_string();
    h = fnv1a64(rel + '\0', h);
    std::ifstream is(f, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    h = fnv1a64(ss.str(), h);
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace pocketrl
