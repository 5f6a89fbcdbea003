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


#ifndef POCKETRL_CHECKPOINT_HPP
#define POCKETRL_CHECKPOINT_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "pocketrl/config.hpp"
#include "pocketrl/denoiser.hpp"
#include "pocketrl/rl.hpp"

namespace pocketrl {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  DenoiserParams params;
  AdamState adam;
  ScheduleConfig schedule;
  std::int64_t iteration = 0;
  std::string rng_state;

  bool operator==(const Checkpoint&) const = default;
};

//! Little-endian binary: magic, version, schedule, denoiser config, tensors,
//! optimizer moments, iteration, RNG state.
void write_checkpoint(std::ostream& os, const Checkpoint& ckpt);
//! Throws std::runtime_error on a bad magic, a version mismatch or truncation.
Checkpoint read_checkpoint(std::istream& is);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pocketrl

#endif  // POCKETRL_CHECKPOINT_HPP
