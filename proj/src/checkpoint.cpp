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


#include "pocketrl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace pocketrl {

namespace {

constexpr char kMagic[8] = {'P', 'R', 'L', 'C', 'K', 'P', 'T', '\0'};

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

template <typename T>
void put(std::ostream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) {
    throw std::runtime_error("checkpoint: truncated file");
  }
  return value;
}

void put_vector(std::ostream& os, const Eigen::VectorXd& v) {
  put<std::uint64_t>(os, static_cast<std::uint64_t>(v.size()));
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

Eigen::VectorXd get_vector(std::istream& is, std::uint64_t expected) {
  const auto n = get<std::uint64_t>(is);
  if (n != expected) {
    throw std::runtime_error("checkpoint: tensor size mismatch");
  }
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  if (!is) {
    throw std::runtime_error("checkpoint: truncated file");
  }
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& os, const Checkpoint& ckpt) {
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kCheckpointVersion);
  put<std::int32_t>(os, ckpt.schedule.T);
  put<double>(os, ckpt.schedule.precision);
  const DenoiserConfig& dc = ckpt.params.config();
  put<std::int32_t>(os, dc.layers);
  put<std::int32_t>(os, dc.hidden);
  put<std::uint8_t>(os, dc.pocket_messages ? 1 : 0);
  put_vector(os, ckpt.params.values());
  const bool has_adam = ckpt.adam.m.size() == ckpt.params.size();
  put<std::uint8_t>(os, has_adam ? 1 : 0);
  if (has_adam) {
    put_vector(os, ckpt.adam.m);
    put_vector(os, ckpt.adam.v);
    put<std::int64_t>(os, ckpt.adam.step);
  }
  put<std::int64_t>(os, ckpt.iteration);
  put<std::uint64_t>(os, ckpt.rng_state.size());
  os.write(ckpt.rng_state.data(), static_cast<std::streamsize>(ckpt.rng_state.size()));
  if (!os) {
    throw std::runtime_error("checkpoint: write failed");
  }
}

Checkpoint read_checkpoint(std::istream& is) {
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("checkpoint: not a checkpoint file");
  }
  const auto version = get<std::uint32_t>(is);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported format version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.schedule.T         = get<std::int32_t>(is);
  ckpt.schedule.precision = get<double>(is);
  DenoiserConfig dc;
  dc.layers          = get<std::int32_t>(is);
  dc.hidden          = get<std::int32_t>(is);
  dc.pocket_messages = get<std::uint8_t>(is) != 0;
  ckpt.params        = DenoiserParams::zeros(dc);
  ckpt.params.values() = get_vector(is, static_cast<std::uint64_t>(ckpt.params.size()));
  if (get<std::uint8_t>(is) != 0) {
    ckpt.adam.m    = get_vector(is, static_cast<std::uint64_t>(ckpt.params.size()));
    ckpt.adam.v    = get_vector(is, static_cast<std::uint64_t>(ckpt.params.size()));
    ckpt.adam.step = get<std::int64_t>(is);
  }
  ckpt.iteration   = get<std::int64_t>(is);
  const auto len   = get<std::uint64_t>(is);
  if (len > (1u << 20)) {
    throw std::runtime_error("checkpoint: corrupt RNG state length");
  }
  ckpt.rng_state.resize(len);
  is.read(ckpt.rng_state.data(), static_cast<std::streamsize>(len));
  if (!is) {
    throw std::runtime_error("checkpoint: truncated file");
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw std::runtime_error("checkpoint: cannot write " + path.string());
  }
  write_checkpoint(os, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw std::runtime_error("checkpoint: cannot read " + path.string());
  }
  return read_checkpoint(is);
}

}  // namespace pocketrl
