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


#include "commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pocketrl/checkpoint.hpp"
#include "pocketrl/config.hpp"
#include "pocketrl/diffusion.hpp"
#include "pocketrl/geometry_io.hpp"
#include "pocketrl/parallel.hpp"
#include "pocketrl/rewards.hpp"
#include "pocketrl/rl.hpp"
#include "pocketrl/schedule.hpp"
#include "pocketrl/synthworld.hpp"

namespace pocketrl::cli {

namespace fs = std::filesystem;

namespace {

// Exclusive ownership of an output directory for the lifetime of a command.
class DirLock {
 public:
  explicit DirLock(const fs::path& dir) : path_(dir / ".lock") {
    fs::create_directories(dir);
    std::FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f) {
      throw std::runtime_error("output directory is locked by another run: " + path_.string());
    }
    std::fclose(f);
  }
  ~DirLock() {
    std::error_code ec;
    fs::remove(path_, ec);
  }
  DirLock(const DirLock&)            = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  fs::path path_;
};

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  bool hash = false;
};

struct Args {
  Common common;
  std::string world;
  std::string checkpoint;
  std::string pool;
  std::string ligands;
  std::string out_file;
  std::optional<int> pocket_index, stride, batch, updates, steps, n, T;
  std::optional<double> clip, lr, wd, precision;
  std::vector<int> strides{1, 5, 10, 20};
};

RunConfig resolve_config(const Args& a) {
  RunConfig cfg = a.common.config_path.empty() ? RunConfig{} : load_config(a.common.config_path);
  if (const char* env = std::getenv("POCKETRL_SEED")) {
    try {
      cfg.seed = std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError("POCKETRL_SEED is not an unsigned integer");
    }
  }
  if (a.common.seed) cfg.seed = *a.common.seed;
  if (a.common.out_dir) cfg.out_dir = *a.common.out_dir;
  if (a.pocket_index) cfg.pocket_index = *a.pocket_index;
  if (a.stride) cfg.ppo.stride = cfg.sample.stride = *a.stride;
  if (a.batch) cfg.ppo.batch_size = *a.batch;
  if (a.updates) cfg.ppo.n_updates = *a.updates;
  if (a.clip) cfg.ppo.clip_eps = *a.clip;
  if (a.lr) cfg.ppo.learning_rate = *a.lr;
  if (a.wd) cfg.ppo.weight_decay = *a.wd;
  if (a.steps) cfg.pretrain.steps = *a.steps;
  if (a.n) cfg.sample.n = *a.n;
  if (a.T) cfg.schedule.T = *a.T;
  if (a.precision) cfg.schedule.precision = *a.precision;
  cfg.validate();
  return cfg;
}

fs::path world_dir(const Args& a, const RunConfig& cfg) {
  return a.world.empty() ? fs::path(cfg.out_dir) / "world" : fs::path(a.world);
}

World require_world(const Args& a, const RunConfig& cfg) {
  const fs::path dir = world_dir(a, cfg);
  if (!fs::exists(dir / "meta.json")) {
    throw ConfigError("world not found: " + dir.string() + " (run gen-world first)");
  }
  return load_world(dir);
}

Checkpoint require_checkpoint(const Args& a, const RunConfig& cfg) {
  if (a.checkpoint.empty()) {
    throw ConfigError("--checkpoint is required");
  }
  if (!fs::exists(a.checkpoint)) {
    throw ConfigError("checkpoint not found: " + a.checkpoint);
  }
  Checkpoint ckpt = load_checkpoint(a.checkpoint);
  if (ckpt.schedule.T != cfg.schedule.T || ckpt.schedule.precision != cfg.schedule.precision) {
    throw ConfigError("checkpoint schedule (T=" + std::to_string(ckpt.schedule.T) +
                      ") does not match the configured schedule");
  }
  return ckpt;
}

Schedule make_schedule(const RunConfig& cfg) { return Schedule::build(cfg.schedule.T, cfg.schedule.precision); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw std::runtime_error("cannot write " + path.string());
  }
  os << text;
}

std::string csv_row(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    out += (i ? "," : "") + cells[i];
  }
  return out + "\n";
}

nlohmann::ordered_json ligand_json(const LigandCloud& ligand) {
  nlohmann::ordered_json coords = nlohmann::ordered_json::array();
  for (int i = 0; i < ligand.size(); ++i) {
    coords.push_back({ligand.coords(i, 0), ligand.coords(i, 1), ligand.coords(i, 2)});
  }
  return {{"types", ligand_types(ligand)}, {"coords", coords}};
}

LigandCloud ligand_from_json(const nlohmann::json& j) {
  const auto types  = j.at("types").get<std::vector<int>>();
  const auto coords = j.at("coords").get<std::vector<std::vector<double>>>();
  if (coords.size() != types.size()) {
    throw std::runtime_error("pool entry: types/coords size mismatch");
  }
  Coords<double> c(static_cast<Eigen::Index>(coords.size()), 3);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    if (coords[i].size() != 3) {
      throw std::runtime_error("pool entry: coordinate rows must have 3 entries");
    }
    c.row(static_cast<Eigen::Index>(i)) << coords[i][0], coords[i][1], coords[i][2];
  }
  return make_clean_ligand(c, types);
}

std::string pool_line(const PoolEntry& e) {
  nlohmann::ordered_json j;
  j["iteration"] = e.iteration;
  j["index"]     = e.index;
  j["valid"]     = e.oracle.valid;
  j["affinity"]  = e.oracle.affinity;
  j["qed"]       = e.oracle.qed_like;
  j["sa"]        = e.oracle.sa_like;
  j["ligand"]    = ligand_json(e.ligand);
  return j.dump() + "\n";
}

std::vector<PoolEntry> read_pool(const fs::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw ConfigError("pool file not found: " + path.string());
  }
  std::vector<PoolEntry> pool;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) {
      continue;
    }
    try {
      const auto j = nlohmann::json::parse(line);
      PoolEntry e;
      e.iteration         = j.at("iteration").get<int>();
      e.index             = j.at("index").get<int>();
      e.oracle.valid      = j.at("valid").get<bool>();
      e.oracle.affinity   = j.at("affinity").get<double>();
      e.oracle.qed_like   = j.at("qed").get<double>();
      e.oracle.sa_like    = j.at("sa").get<double>();
      e.ligand            = ligand_from_json(j.at("ligand"));
      e.oracle.descriptor = descriptor(e.ligand);
      pool.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw std::runtime_error("malformed pool line: " + std::string(ex.what()));
    }
  }
  return pool;
}

PocketCloud reference_pocket(const World& world, int index) {
  const Complex& c = world.complexes.at(static_cast<std::size_t>(index));
  return center_on_ligand(c.pocket, c.ligand).first;
}

std::string history_header() {
  return "iteration,affinity_mean,affinity_std,qed_mean,qed_std,sa_mean,sa_std,composite_mean,invalid_rate,updated\n";
}

std::string history_line(const HistoryRow& r) {
  return csv_row({std::to_string(r.iteration), to_text(r.affinity_mean), to_text(r.affinity_std), to_text(r.qed_mean),
                  to_text(r.qed_std), to_text(r.sa_mean), to_text(r.sa_std), to_text(r.composite_mean),
                  to_text(r.invalid_rate), r.updated ? "1" : "0"});
}

void report_hash(const Common& c, const fs::path& target) {
  if (c.hash) {
    std::cout << "digest " << digest_tree(target) << "\n";
  }
}

int cmd_gen_world(const Args& a) {
  const RunConfig cfg = resolve_config(a);
  const fs::path dir  = world_dir(a, cfg);
  WorldConfig wc      = cfg.world;
  if (a.common.seed) {
    wc.seed = *a.common.seed;
  }
  const World world = generate_world(wc);
  {
    DirLock lock(dir);
    save_world(dir, world);
  }
  std::cout << "wrote " << world.complexes.size() << " complexes to " << dir.string() << "\n";
  report_hash(a.common, dir);
  return kExitOk;
}

int cmd_pretrain(const Args& a) {
  const RunConfig cfg  = resolve_config(a);
  const World world    = require_world(a, cfg);
  const fs::path out   = cfg.out_dir;
  const Schedule sched = make_schedule(cfg);
  {
    DirLock lock(out);
    std::string curve = "step,loss\n";
    const PretrainResult res =
        pretrain(world.complexes, DenoiserParams::initialize(cfg.denoiser, cfg.seed), cfg.pretrain, sched, cfg.seed,
                 [&curve](int step, double loss) { curve += csv_row({std::to_string(step), to_text(loss)}); });
    write_text(out / "pretrain_loss.csv", curve);
    Checkpoint ckpt{res.params, res.adam, cfg.schedule, cfg.pretrain.steps, Rng(cfg.seed).state()};
    save_checkpoint(out / "pretrain.ckpt", ckpt);
    write_text(out / "config.json", to_json(cfg));
  }
  std::cout << "pretrained " << cfg.pretrain.steps << " steps -> " << (out / "pretrain.ckpt").string() << "\n";
  report_hash(a.common, out);
  return kExitOk;
}

int cmd_finetune(const Args& a) {
  const RunConfig cfg   = resolve_config(a);
  const World world     = require_world(a, cfg);
  const Checkpoint init = require_checkpoint(a, cfg);
  const Schedule sched  = make_schedule(cfg);
  const fs::path out    = cfg.out_dir;
  const Eigen::VectorXd target = target_histogram(world.complexes);
  const OracleRegistry registry = OracleRegistry::with_defaults(target);
  std::vector<PocketCloud> pockets;
  if (cfg.ppo.round_robin) {
    for (int i = 0; i < world.config.n_pockets; ++i) {
      pockets.push_back(reference_pocket(world, (cfg.pocket_index + i) % world.config.n_pockets));
    }
  } else {
    pockets.push_back(reference_pocket(world, cfg.pocket_index));
  }
  {
    DirLock lock(out);
    std::ofstream history(out / "history.csv", std::ios::binary);
    history << history_header();
    FinetuneCallbacks cb;
    cb.on_iteration = [&history](const HistoryRow& row) {
      history << history_line(row);
      history.flush();
    };
    cb.on_checkpoint = [&](int it, const DenoiserParams& p, const AdamState& adam) {
      save_checkpoint(out / ("finetune_" + std::to_string(it) + ".ckpt"),
                      Checkpoint{p, adam, cfg.schedule, it, Rng(cfg.seed).state()});
    };
    const FinetuneResult res = finetune(pockets, init.params, cfg.ppo, sched, SizeSampler::from_complexes(world.complexes),
                                        registry, cfg.rewards, target, cfg.seed, cb);
    std::ofstream pool(out / "pool.jsonl", std::ios::binary);
    for (const auto& e : res.pool) {
      pool << pool_line(e);
    }
    save_checkpoint(out / "final.ckpt",
                    Checkpoint{res.params, res.adam, cfg.schedule, cfg.ppo.n_updates, Rng(cfg.seed).state()});
    write_text(out / "config.json", to_json(cfg));
  }
  std::cout << "fine-tuned " << cfg.ppo.n_updates << " iterations -> " << out.string() << "\n";
  report_hash(a.common, out);
  return kExitOk;
}

int cmd_sample(const Args& a) {
  const RunConfig cfg   = resolve_config(a);
  const World world     = require_world(a, cfg);
  const Checkpoint ckpt = require_checkpoint(a, cfg);
  const Schedule sched  = make_schedule(cfg);
  const fs::path out    = cfg.out_dir;
  const Eigen::VectorXd target = target_histogram(world.complexes);
  const PocketCloud pocket     = reference_pocket(world, cfg.pocket_index);
  const RolloutBatch batch = rollout(ckpt.params, pocket, sched, SizeSampler::from_complexes(world.complexes),
                                     cfg.sample.n, cfg.sample.stride, cfg.seed, kEvaluationStream, target, false);
  const int n = cfg.sample.n;
  std::vector<Eigen::VectorXd> desc;
  std::vector<int> valid_rows;
  for (int i = 0; i < n; ++i) {
    if (batch.trajectories[i].oracle.valid) {
      valid_rows.push_back(i);
      desc.push_back(batch.trajectories[i].oracle.descriptor);
    }
  }
  const Eigen::VectorXd div_valid = diversity_scores(desc, cfg.rewards.diversity_mode);
  Eigen::VectorXd div             = Eigen::VectorXd::Zero(n);
  for (std::size_t k = 0; k < valid_rows.size(); ++k) {
    div(valid_rows[k]) = div_valid(static_cast<Eigen::Index>(k));
  }
  {
    DirLock lock(out);
    fs::create_directories(out / "ligands");
    Eigen::MatrixXd table(n, 6);
    std::string csv = "index,n_atoms,valid,affinity,qed,sa,diversity\n";
    for (int i = 0; i < n; ++i) {
      const Trajectory& t = batch.trajectories[i];
      save_xyz(out / "ligands" / (std::to_string(i) + ".xyz"), t.ligand);
      table.row(i) << t.ligand.size(), t.oracle.valid ? 1.0 : 0.0, t.oracle.affinity, t.oracle.qed_like,
          t.oracle.sa_like, div(i);
      csv += csv_row({std::to_string(i), std::to_string(t.ligand.size()), t.oracle.valid ? "1" : "0",
                      to_text(t.oracle.affinity), to_text(t.oracle.qed_like), to_text(t.oracle.sa_like),
                      to_text(div(i))});
    }
    std::vector<std::string> mean_row{"mean"}, median_row{"median"};
    for (Eigen::Index c = 0; c < table.cols(); ++c) {
      double sum = 0.0;
      for (int i = 0; i < n; ++i) {
        sum += table(i, c);
      }
      std::vector<double> col(table.col(c).data(), table.col(c).data() + n);
      std::sort(col.begin(), col.end());
      const double median = n % 2 ? col[n / 2] : 0.5 * (col[n / 2 - 1] + col[n / 2]);
      mean_row.push_back(to_text(sum / n));
      median_row.push_back(to_text(median));
    }
    csv += csv_row(mean_row) + csv_row(median_row);
    write_text(out / "samples.csv", csv);
  }
  std::cout << "sampled " << n << " ligands -> " << (out / "samples.csv").string() << "\n";
  report_hash(a.common, out);
  return kExitOk;
}

int cmd_topn(const Args& a) {
  const RunConfig cfg = resolve_config(a);
  if (a.pool.empty()) {
    throw ConfigError("--pool is required");
  }
  const std::vector<PoolEntry> pool = read_pool(a.pool);
  const int n                       = a.n.value_or(10);
  const std::vector<PoolEntry> top  = topn_harvest(pool, n);
  if (top.empty()) {
    std::cerr << "warning: the pool has no valid ligand; writing an empty selection\n";
  }
  const fs::path target = a.out_file.empty() ? fs::path(cfg.out_dir) / ("top" + std::to_string(n) + ".jsonl")
                                             : fs::path(a.out_file);
  if (target.has_parent_path()) {
    fs::create_directories(target.parent_path());
  }
  std::string text;
  for (const auto& e : top) {
    text += pool_line(e);
  }
  write_text(target, text);
  std::cout << "selected " << top.size() << " of " << pool.size() << " -> " << target.string() << "\n";
  report_hash(a.common, target);
  return kExitOk;
}

int cmd_variance_profile(const Args& a) {
  const RunConfig cfg  = resolve_config(a);
  const Schedule sched = make_schedule(cfg);
  std::vector<int> strides = a.strides;
  std::sort(strides.begin(), strides.end());
  strides.erase(std::unique(strides.begin(), strides.end()), strides.end());
  std::string csv = "t,stride,sigma_q\n";
  for (int stride : strides) {
    for (const auto& p : variance_profile(sched, stride)) {
      // Larger strides must not lower the variance at the same landing step.
      if (p.t > p.s + 1 && !(p.sigma_q > posterior_params(sched, p.s, p.s + 1).sigma_q)) {
        throw std::runtime_error("variance ordering violated at t=" + std::to_string(p.t));
      }
      csv += csv_row({std::to_string(p.t), std::to_string(stride), to_text(p.sigma_q)});
    }
  }
  const fs::path target =
      a.out_file.empty() ? fs::path(cfg.out_dir) / "variance_profile.csv" : fs::path(a.out_file);
  if (target.has_parent_path()) {
    fs::create_directories(target.parent_path());
  }
  write_text(target, csv);
  std::cout << "wrote " << target.string() << "\n";
  report_hash(a.common, target);
  return kExitOk;
}

int cmd_eval(const Args& a) {
  const RunConfig cfg = resolve_config(a);
  const World world   = require_world(a, cfg);
  if (a.ligands.empty()) {
    throw ConfigError("--ligands is required");
  }
  std::vector<fs::path> files;
  if (fs::is_directory(a.ligands)) {
    for (const auto& entry : fs::directory_iterator(a.ligands)) {
      if (entry.is_regular_file() && entry.path().extension() == ".xyz") {
        files.push_back(entry.path());
      }
    }
  } else if (fs::is_regular_file(a.ligands)) {
    files.push_back(a.ligands);
  } else {
    throw ConfigError("ligand path not found: " + a.ligands);
  }
  std::sort(files.begin(), files.end());
  const Eigen::VectorXd target = target_histogram(world.complexes);
  const PocketCloud pocket     = reference_pocket(world, cfg.pocket_index);
  std::string csv              = "file,n_atoms,valid,affinity,qed,sa\n";
  for (const auto& f : files) {
    const LigandCloud lig = load_ligand_xyz(f);
    const OracleVector o  = evaluate_oracles(lig, pocket, target);
    csv += csv_row({f.filename().string(), std::to_string(lig.size()), o.valid ? "1" : "0", to_text(o.affinity),
                    to_text(o.qed_like), to_text(o.sa_like)});
  }
  const fs::path out = a.out_file.empty() ? fs::path(cfg.out_dir) / "eval.csv" : fs::path(a.out_file);
  if (out.has_parent_path()) {
    fs::create_directories(out.parent_path());
  }
  write_text(out, csv);
  std::cout << "evaluated " << files.size() << " ligands -> " << out.string() << "\n";
  report_hash(a.common, out);
  return kExitOk;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config_path, "JSON run configuration")->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "Random seed (overrides config)");
  sub->add_option("--out-dir", c.out_dir, "Output directory (overrides config)");
  sub->add_flag("--hash", c.hash, "Print a digest of all outputs");
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Pocket-conditioned diffusion pretraining and policy fine-tuning on synthetic worlds"};
  app.require_subcommand(1);
  Args a;

  auto* gen = app.add_subcommand("gen-world", "Generate the synthetic pocket/ligand world");
  add_common(gen, a.common);
  gen->add_option("--world", a.world, "World directory (default <out-dir>/world)");

  auto* pre = app.add_subcommand("pretrain", "Train the denoiser with the epsilon-matching loss");
  add_common(pre, a.common);
  pre->add_option("--world", a.world, "World directory");
  pre->add_option("--steps", a.steps, "Optimizer steps");

  auto* fin = app.add_subcommand("finetune", "Policy fine-tuning on one pocket");
  add_common(fin, a.common);
  fin->add_option("--world", a.world, "World directory");
  fin->add_option("--checkpoint", a.checkpoint, "Initial checkpoint");
  fin->add_option("--pocket-index", a.pocket_index, "Pocket index in the world");
  fin->add_option("--stride", a.stride, "Denoising stride");
  fin->add_option("--batch", a.batch, "Trajectories per iteration");
  fin->add_option("--updates", a.updates, "Policy updates");
  fin->add_option("--clip", a.clip, "PPO clip range");
  fin->add_option("--lr", a.lr, "Learning rate");
  fin->add_option("--wd", a.wd, "Weight decay");

  auto* smp = app.add_subcommand("sample", "Sample ligands and score them");
  add_common(smp, a.common);
  smp->add_option("--world", a.world, "World directory");
  smp->add_option("--checkpoint", a.checkpoint, "Checkpoint to sample from");
  smp->add_option("--pocket-index", a.pocket_index, "Pocket index in the world");
  smp->add_option("--n", a.n, "Number of ligands");
  smp->add_option("--stride", a.stride, "Denoising stride");

  auto* top = app.add_subcommand("topn", "Select the best ligands of a harvested pool");
  add_common(top, a.common);
  top->add_option("--pool", a.pool, "pool.jsonl written by finetune");
  top->add_option("--n", a.n, "Number of ligands to keep (default 10)");
  top->add_option("--out", a.out_file, "Output file (default <out-dir>/top<n>.jsonl)");

  auto* var = app.add_subcommand("variance-profile", "Write sigma_q along coarse grids");
  add_common(var, a.common);
  var->add_option("--T", a.T, "Diffusion steps");
  var->add_option("--precision", a.precision, "Schedule precision");
  var->add_option("--strides", a.strides, "Strides")->delimiter(',');
  var->add_option("--out", a.out_file, "Output CSV (default <out-dir>/variance_profile.csv)");

  auto* ev = app.add_subcommand("eval", "Score ligand files against a world pocket");
  add_common(ev, a.common);
  ev->add_option("--world", a.world, "World directory");
  ev->add_option("--pocket-index", a.pocket_index, "Pocket index in the world");
  ev->add_option("--ligands", a.ligands, "Ligand .xyz file or directory");
  ev->add_option("--out", a.out_file, "Output CSV (default <out-dir>/eval.csv)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (gen->parsed()) return cmd_gen_world(a);
    if (pre->parsed()) return cmd_pretrain(a);
    if (fin->parsed()) return cmd_finetune(a);
    if (smp->parsed()) return cmd_sample(a);
    if (top->parsed()) return cmd_topn(a);
    if (var->parsed()) return cmd_variance_profile(a);
    if (ev->parsed()) return cmd_eval(a);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}

}  // namespace pocketrl::cli
