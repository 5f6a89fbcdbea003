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


#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pocketrl/checkpoint.hpp"
#include "pocketrl/config.hpp"

namespace pocketrl {
namespace {

TEST(RunConfig, JsonRoundTrip) {
  const RunConfig def;
  EXPECT_EQ(from_json(to_json(def)), def);
  RunConfig cfg;
  cfg.world.seed           = 17;
  cfg.schedule.T           = 300;
  cfg.denoiser.hidden      = 16;
  cfg.denoiser.pocket_messages = true;
  cfg.pretrain.steps       = 12;
  cfg.ppo.learning_rate    = 3.25e-5;
  cfg.ppo.stride           = 20;
  cfg.rewards.weights      = {{"affinity", 1.0}, {"qed", 0.1 + 0.2}};
  cfg.rewards.diversity_mode = DiversityMode::kTanimoto;
  cfg.sample.n             = 7;
  cfg.pocket_index         = 3;
  cfg.seed                 = 0xffffffffffffffffULL;
  cfg.out_dir              = "some/dir";
  EXPECT_EQ(from_json(to_json(cfg)), cfg);
  EXPECT_EQ(to_json(from_json(to_json(cfg))), to_json(cfg));
}

TEST(RunConfig, PartialJsonOverridesDefaults) {
  const RunConfig cfg = from_json(R"({"ppo": {"stride": 20}, "seed": 4})");
  RunConfig expect;
  expect.ppo.stride = 20;
  expect.seed       = 4;
  EXPECT_EQ(cfg, expect);
}

TEST(RunConfig, RejectsUnknownKeysAndBadTypes) {
  EXPECT_THROW(from_json(R"({"bogus": 1})"), ConfigError);
  EXPECT_THROW(from_json(R"({"ppo": {"strides": 5}})"), ConfigError);
  EXPECT_THROW(from_json(R"({"ppo": {"stride": "five"}})"), ConfigError);
  EXPECT_THROW(from_json(R"({"rewards": {"diversity_mode": "jaccard"}})"), ConfigError);
  EXPECT_THROW(from_json(R"({"ppo": {"clip_eps": 1.5}})"), ConfigError);
  EXPECT_THROW(from_json(R"({"schedule": {"T": 0}})"), ConfigError);
  EXPECT_THROW(from_json("{not json"), ConfigError);
  EXPECT_THROW(from_json("[]"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/pocketrl.json"), ConfigError);
}

TEST(Digest, Fnv1aReferenceValues) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Digest, TreeDependsOnNamesAndContents) {
  const auto root = std::filesystem::temp_directory_path() / "pocketrl_test_digest";
  std::filesystem::remove_all(root);
  std::filesystem::create_directories(root / "sub");
  std::ofstream(root / "a.txt") << "hello";
  std::ofstream(root / "sub" / "b.txt") << "world";
  const std::string d1 = digest_tree(root);
  EXPECT_EQ(d1.size(), 16u);
  EXPECT_EQ(digest_tree(root), d1);
  std::ofstream(root / "a.txt") << "hellO";
  const std::string d2 = digest_tree(root);
  EXPECT_NE(d2, d1);
  std::filesystem::rename(root / "a.txt", root / "c.txt");
  EXPECT_NE(digest_tree(root), d2);
  std::filesystem::remove_all(root);
}

Checkpoint sample_checkpoint() {
  Checkpoint c;
  c.params    = DenoiserParams::initialize({3, 8, true}, 5);
  c.adam      = AdamState::zeros(c.params.size());
  Rng rng(1);
  rng.fill_normal(c.adam.m);
  rng.fill_normal(c.adam.v);
  c.adam.v    = c.adam.v.cwiseAbs();
  c.adam.step = 42;
  c.schedule  = {300, 2e-4};
  c.iteration = 25;
  c.rng_state = rng.state();
  return c;
}

TEST(Checkpoint, BitExactRoundTrip) {
  const Checkpoint c = sample_checkpoint();
  std::stringstream ss;
  write_checkpoint(ss, c);
  const std::string bytes = ss.str();
  EXPECT_EQ(bytes.substr(0, 8), std::string("PRLCKPT\0", 8));
  const Checkpoint back = read_checkpoint(ss);
  EXPECT_EQ(back, c);
  std::stringstream again;
  write_checkpoint(again, back);
  EXPECT_EQ(again.str(), bytes);

  const auto path = std::filesystem::temp_directory_path() / "pocketrl_test.ckpt";
  save_checkpoint(path, c);
  EXPECT_EQ(load_checkpoint(path), c);
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsVersionMismatchAndTruncation) {
  std::stringstream ss;
  write_checkpoint(ss, sample_checkpoint());
  std::string bytes = ss.str();

  std::string bumped = bytes;
  bumped[8]          = static_cast<char>(kCheckpointVersion + 1);
  std::istringstream v(bumped);
  EXPECT_THROW(read_checkpoint(v), std::runtime_error);

  std::string bad_magic = bytes;
  bad_magic[0]          = 'X';
  std::istringstream m(bad_magic);
  EXPECT_THROW(read_checkpoint(m), std::runtime_error);

  for (std::size_t cut : {std::size_t{4}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
    std::istringstream t(bytes.substr(0, cut));
    EXPECT_THROW(read_checkpoint(t), std::runtime_error);
  }
  EXPECT_THROW(load_checkpoint("/nonexistent/x.ckpt"), std::runtime_error);
}

}  // namespace
}  // namespace pocketrl
