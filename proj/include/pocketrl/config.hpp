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


#ifndef POCKETRL_CONFIG_HPP
#define POCKETRL_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "pocketrl/denoiser.hpp"
#include "pocketrl/rewards.hpp"
#include "pocketrl/rl.hpp"
#include "pocketrl/synthworld.hpp"

namespace pocketrl {

//! Invalid or unknown configuration; maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScheduleConfig {
  int T            = 500;
  double precision = 1e-4;

  bool operator==(const ScheduleConfig&) const = default;
};

struct SampleConfig {
  int n      = 100;
  int stride = 5;

  bool operator==(const SampleConfig&) const = default;
};

struct RunConfig {
  WorldConfig world;
  ScheduleConfig schedule;
  DenoiserConfig denoiser;
  PretrainConfig pretrain;
  PpoConfig ppo;
  RewardConfig rewards;
  SampleConfig sample;
  int pocket_index     = 0;
  std::uint64_t seed   = 0;
  std::string out_dir  = "out";

  //! Throws ConfigError on any out-of-range field.
  void validate() const;
  bool operator==(const RunConfig&) const = default;
};

//! JSON text with every field; from_json(to_json(c)) == c.
std::string to_json(const RunConfig& cfg);
//! Parses JSON over the defaults and validates. Unknown keys, type mismatches
//! and out-of-range values throw ConfigError.
RunConfig from_json(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

//! FNV-1a 64-bit digest.
std::uint64_t fnv1a64(const std::string& bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
//! Digest over all regular files under `root` (relative path + contents, in
//! sorted path order), formatted as 16 hex digits.
std::string digest_tree(const std::filesystem::path& root);

}  // namespace pocketrl

#endif  // POCKETRL_CONFIG_HPP
