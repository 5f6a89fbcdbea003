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

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

struct Result {
  int code = -1;
  std::string out;
};

Result run(const fs::path& cwd, const std::string& args, int threads = 1) {
  const std::string cmd = "cd '" + cwd.string() + "' && POCKETRL_THREADS=" + std::to_string(threads) + " '" +
                          POCKETRL_CLI_PATH + "' " + args + " 2>&1";
  Result r;
  std::FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe)) r.out += buf.data();
  const int status = pclose(pipe);
  r.code           = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string digest_of(const Result& r) {
  const auto pos = r.out.rfind("digest ");
  return pos == std::string::npos ? std::string() : r.out.substr(pos + 7, 16);
}

constexpr const char* kSmallConfig = R"({
  "world": {"n_pockets": 4},
  "schedule": {"T": 100},
  "denoiser": {"layers": 2, "hidden": 8},
  "pretrain": {"steps": 20, "batch_size": 4},
  "ppo": {"batch_size": 4, "n_updates": 2, "stride": 25, "checkpoint_every": 1},
  "sample": {"n": 4, "stride": 25}
})";

const std::vector<std::pair<std::string, std::string>>& pipeline() {
  static const std::vector<std::pair<std::string, std::string>> steps = {
      {"gen-world", "gen-world --config cfg.json --out-dir out --hash"},
      {"pretrain", "pretrain --config cfg.json --out-dir out/pre --world out/world --hash"},
      {"finetune", "finetune --config cfg.json --out-dir out/fin --world out/world --checkpoint out/pre/pretrain.ckpt "
                   "--hash"},
      {"sample", "sample --config cfg.json --out-dir out/smp --world out/world --checkpoint out/fin/final.ckpt --hash"},
      {"topn", "topn --config cfg.json --out-dir out/top --pool out/fin/pool.jsonl --n 3 --hash"},
      {"variance-profile", "variance-profile --config cfg.json --out-dir out/var --hash"},
      {"eval", "eval --config cfg.json --out-dir out/ev --world out/world --ligands out/smp/ligands --hash"},
  };
  return steps;
}

std::map<std::string, std::string> run_pipeline(const fs::path& base, int threads) {
  fs::remove_all(base);
  fs::create_directories(base);
  std::ofstream(base / "cfg.json") << kSmallConfig;
  std::map<std::string, std::string> digests;
  for (const auto& [name, args] : pipeline()) {
    const Result r = run(base, args, threads);
    EXPECT_EQ(r.code, 0) << name << ":\n" << r.out;
    digests[name] = digest_of(r);
    EXPECT_EQ(digests[name].size(), 16u) << name << ":\n" << r.out;
  }
  return digests;
}

const fs::path kRoot = fs::temp_directory_path() / "pocketrl_test_cli";

TEST(Cli, EverySubcommandIsDeterministicAcrossRunsAndThreads) {
  const auto a = run_pipeline(kRoot / "a", 1);
  const auto b = run_pipeline(kRoot / "b", 1);
  const auto c = run_pipeline(kRoot / "c", 8);
  for (const auto& [name, args] : pipeline()) {
    EXPECT_EQ(a.at(name), b.at(name)) << name;
    EXPECT_EQ(a.at(name), c.at(name)) << name;
  }
  // Expected artifacts.
  const fs::path out = kRoot / "a" / "out";
  for (const char* f : {"world/meta.json", "world/0/pocket.xyz", "world/3/ligand.xyz", "pre/pretrain.ckpt",
                        "pre/pretrain_loss.csv", "pre/config.json", "fin/history.csv", "fin/pool.jsonl",
                        "fin/finetune_1.ckpt", "fin/finetune_2.ckpt", "fin/final.ckpt", "smp/samples.csv",
                        "smp/ligands/0.xyz", "top/top3.jsonl", "var/variance_profile.csv", "ev/eval.csv"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  std::ifstream hist(out / "fin" / "history.csv");
  std::string header;
  std::getline(hist, header);
  EXPECT_EQ(header, "iteration,affinity_mean,affinity_std,qed_mean,qed_std,sa_mean,sa_std,composite_mean,"
                    "invalid_rate,updated");
  int rows = 0;
  for (std::string line; std::getline(hist, line);) ++rows;
  EXPECT_EQ(rows, 2);
  EXPECT_FALSE(fs::exists(out / "fin" / ".lock"));
}

TEST(Cli, SeedChangesOutputs) {
  const fs::path base = kRoot / "seed";
  fs::remove_all(base);
  fs::create_directories(base);
  const Result a = run(base, "gen-world --out-dir w1 --seed 1 --hash");
  const Result b = run(base, "gen-world --out-dir w1 --seed 2 --hash");
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(b.code, 0);
  EXPECT_NE(digest_of(a), digest_of(b));
}

TEST(Cli, ExitCodes) {
  const fs::path base = kRoot / "codes";
  fs::remove_all(base);
  fs::create_directories(base);
  EXPECT_EQ(run(base, "--help").code, 0);
  EXPECT_EQ(run(base, "").code, 2);
  EXPECT_EQ(run(base, "no-such-command").code, 2);
  EXPECT_EQ(run(base, "gen-world --bogus").code, 2);
  std::ofstream(base / "bad.json") << R"({"ppo": {"strides": 3}})";
  EXPECT_EQ(run(base, "gen-world --config bad.json").code, 2);
  std::ofstream(base / "range.json") << R"({"ppo": {"clip_eps": 2.0}})";
  EXPECT_EQ(run(base, "gen-world --config range.json").code, 2);
  EXPECT_EQ(run(base, "pretrain --world missing").code, 2);
  EXPECT_EQ(run(base, "variance-profile --strides 0").code, 3);
  std::ofstream(base / "pool.jsonl") << "{not json}\n";
  EXPECT_EQ(run(base, "topn --pool pool.jsonl").code, 3);
  // A stale lock makes the run fail instead of clobbering outputs.
  fs::create_directories(base / "locked" / "world");
  std::ofstream(base / "locked" / "world" / ".lock") << "";
  EXPECT_EQ(run(base, "gen-world --out-dir locked").code, 3);
}

}  // namespace
