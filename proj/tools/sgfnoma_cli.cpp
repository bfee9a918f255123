/*
 *  Copyright 2026 The sgfnoma Authors
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 *  Unless required by applicable law or agreed to in writing, software
 *  distributed under the License is distributed on an "AS IS" BASIS,
 *  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *  See the License for the specific language governing permissions and
 *  limitations under the License.
 */

// Command-line front end. Talks to the simulator only through the C API.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sgfnoma/sgfnoma.h"

namespace fs = std::filesystem;

namespace {

constexpr const char* kOutRootVar = "SGFNOMA_OUT_ROOT";

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(sgf_status status) {
  if (status != SGF_OK)
    throw Failure(std::string(sgf_status_name(status)) + ": " + sgf_last_error());
}

template <class T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(ptr); }
  T** out() { return &ptr; }
  T* get() const { return ptr; }
};

using Config = Handle<sgf_config, sgf_config_free>;
using Trainer = Handle<sgf_trainer, sgf_trainer_free>;
using Pools = Handle<sgf_pools, sgf_pools_free>;

// Flags shared by every subcommand that builds a configuration.
struct ConfigFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> episodes;
  std::optional<int> steps;
  std::optional<int> agents;
  std::optional<int> channels;
  std::optional<int> levels;
  std::optional<std::string> algorithm;
  std::optional<std::string> seeds;
  std::vector<std::string> sets;

  void add_to(CLI::App* app) {
    app->add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "Master seed (default 1)");
    app->add_option("--seeds", seeds, "Seed list for multi-seed commands, e.g. 1,2,3");
    app->add_option("--episodes", episodes, "Training episodes (default 500)");
    app->add_option("--steps", steps, "Steps per episode (default 100)");
    app->add_option("--agents", agents, "Number of GF users / agents (default 12)");
    app->add_option("--channels", channels,
                    "Sub-channels, each with one GB user (default 3)");
    app->add_option("--levels", levels,
                    "Power levels spread evenly over 0.1..0.9 W (default 9)");
    app->add_option("--algorithm", algorithm, "ddqn or dueling (default dueling)")
        ->check(CLI::IsMember({"ddqn", "dueling"}));
    app->add_option("--set", sets, "Override any config key: key=value (repeatable)");
  }

  void apply(sgf_config* cfg) const {
    auto set = [cfg](const std::string& key, const std::string& value) {
      check(sgf_config_set(cfg, key.c_str(), value.c_str()));
    };
    if (seed) set("seed", std::to_string(*seed));
    if (seeds) set("seeds", "[" + *seeds + "]");
    if (episodes) set("episodes", std::to_string(*episodes));
    if (steps) set("steps_per_episode", std::to_string(*steps));
    if (agents) set("num_gf", std::to_string(*agents));
    if (channels) {
      set("num_subchannels", std::to_string(*channels));
      set("num_gb", std::to_string(*channels));
    }
    if (levels) set("num_power_levels", std::to_string(*levels));
    if (algorithm) set("algorithm", *algorithm);
    for (const std::string& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0)
        throw Failure("--set expects key=value, got '" + kv + "'");
      set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    check(sgf_config_validate(cfg));
  }

  void build(Config& cfg) const {
    check(sgf_config_load(config_path.empty() ? nullptr : config_path.c_str(), cfg.out()));
    apply(cfg.get());
  }
};

std::string default_out(const std::string& command) {
  const char* root = std::getenv(kOutRootVar);
  return (fs::path(root && *root ? root : "runs") / command).string();
}

fs::path prepare_out(std::string& out, const std::string& command) {
  if (out.empty()) out = default_out(command);
  fs::create_directories(out);
  return fs::path(out);
}

void manifest(const sgf_config* cfg, const std::string& command, const fs::path& dir,
              const std::vector<std::string>& outputs,
              std::chrono::steady_clock::time_point start) {
  std::vector<const char*> ptrs;
  for (const auto& o : outputs) ptrs.push_back(o.c_str());
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  check(sgf_write_manifest(cfg, command.c_str(), ptrs.data(), ptrs.size(), seconds,
                           (dir / "manifest.json").string().c_str()));
}

void print_stats(const char* label, const sgf_stats& s) {
  std::printf("%s: slots=%lld capacity=%.4f throughput=%.4f reward=%.4f "
              "constraints_met=%.3f gb_violation=%.3f\n",
              label, s.slots, s.mean_capacity, s.mean_throughput, s.mean_reward,
              s.constraint_rate, s.gb_violation_rate);
}

void sweep_progress(const char* axis, int value, std::uint64_t seed, double final_average,
                    int plateau, double seconds, void*) {
  std::printf("%s=%d seed=%llu final_ma=%.4f plateau=%d (%.0fs)\n", axis, value,
              static_cast<unsigned long long>(seed), final_average, plateau, seconds);
  std::fflush(stdout);
}

std::vector<std::uint64_t> seed_list(const sgf_config* cfg) {
  std::size_t need = 0;
  check(sgf_config_to_json(cfg, nullptr, 0, &need));
  std::string text(need, '\0');
  check(sgf_config_to_json(cfg, text.data(), text.size(), nullptr));
  text.resize(need - 1);
  return nlohmann::json::parse(text).at("seeds").get<std::vector<std::uint64_t>>();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-grant-free NOMA simulator with multi-agent DDQN power control"};
  app.set_version_flag("--version", std::string(sgf_version()));
  app.require_subcommand(1);
  app.footer(std::string("Outputs go to --out, or to $") + kOutRootVar +
             "/<command> (default runs/<command>).");

  std::string out;
  std::string checkpoint;
  int eval_episodes = 0;
  bool no_buffers = false;

  ConfigFlags train_flags;
  auto* train = app.add_subcommand("train", "Train agents; write metrics and a checkpoint");
  train_flags.add_to(train);
  train->add_option("--out", out, "Output directory");
  train->add_flag("--no-buffers", no_buffers, "Leave replay buffers out of the checkpoint");

  auto* evaluate = app.add_subcommand("evaluate", "Greedy evaluation of a checkpoint");
  evaluate->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  evaluate->add_option("--eval-episodes", eval_episodes, "Evaluation episodes");
  evaluate->add_option("--out", out, "Output directory");

  auto* extract = app.add_subcommand("extract-pool", "Extract power pools from a checkpoint");
  extract->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
  extract->add_option("--out", out, "Output directory");

  ConfigFlags compare_flags;
  auto* compare = app.add_subcommand(
      "compare-baselines", "Train per seed and compare against FPA, fixed-SGF and pure-GF");
  compare_flags.add_to(compare);
  compare->add_option("--checkpoint", checkpoint, "Use this trained run instead of training");
  compare->add_option("--out", out, "Output directory");

  ConfigFlags sweep_flags[3];
  const char* sweep_names[3] = {"sweep-levels", "sweep-cluster", "sweep-agents"};
  const char* sweep_help[3] = {"Train across power-level counts",
                               "Train across GF users per sub-channel",
                               "Train across agent counts"};
  CLI::App* sweeps[3];
  for (int i = 0; i < 3; ++i) {
    sweeps[i] = app.add_subcommand(sweep_names[i], sweep_help[i]);
    sweep_flags[i].add_to(sweeps[i]);
    sweeps[i]->add_option("--out", out, "Output directory");
  }

  CLI11_PARSE(app, argc, argv);

  const auto start = std::chrono::steady_clock::now();
  try {
    if (*train) {
      Config cfg;
      train_flags.build(cfg);
      const fs::path dir = prepare_out(out, "train");
      Trainer t;
      check(sgf_trainer_new(cfg.get(), t.out()));
      check(sgf_trainer_open_metrics(t.get(), (dir / "metrics.csv").string().c_str()));
      check(sgf_trainer_run(t.get(), -1));
      check(sgf_trainer_write_summary(t.get(), (dir / "episodes.csv").string().c_str()));
      check(sgf_trainer_save(t.get(), (dir / "checkpoint.cbor").string().c_str(), !no_buffers));
      manifest(cfg.get(), "train", dir, {"metrics.csv", "episodes.csv", "checkpoint.cbor"}, start);
      std::printf("trained; outputs in %s\n", dir.string().c_str());
    } else if (*evaluate) {
      const fs::path dir = prepare_out(out, "evaluate");
      Trainer t;
      check(sgf_trainer_load(checkpoint.c_str(), nullptr, t.out()));
      sgf_stats stats{};
      check(sgf_trainer_evaluate(t.get(), eval_episodes,
                                 (dir / "evaluation.csv").string().c_str(), &stats));
      Config cfg;
      check(sgf_trainer_config(t.get(), cfg.out()));
      manifest(cfg.get(), "evaluate", dir, {"evaluation.csv"}, start);
      print_stats("greedy", stats);
    } else if (*extract) {
      const fs::path dir = prepare_out(out, "extract-pool");
      Trainer t;
      check(sgf_trainer_load(checkpoint.c_str(), nullptr, t.out()));
      Config cfg;
      check(sgf_trainer_config(t.get(), cfg.out()));
      Pools pools;
      check(sgf_pools_extract(t.get(), pools.out()));
      check(sgf_pools_save(pools.get(), cfg.get(), (dir / "pools.json").string().c_str(),
                           (dir / "pools.txt").string().c_str()));
      manifest(cfg.get(), "extract-pool", dir, {"pools.json", "pools.txt"}, start);
      std::printf("pools in %s\n", dir.string().c_str());
    } else if (*compare) {
      const fs::path dir = prepare_out(out, "compare-baselines");
      const std::string csv = (dir / "comparison.csv").string();
      Config cfg;
      if (!checkpoint.empty()) {
        Trainer t;
        check(sgf_trainer_load(checkpoint.c_str(), nullptr, t.out()));
        check(sgf_trainer_config(t.get(), cfg.out()));
        check(sgf_compare_baselines(t.get(), nullptr, csv.c_str(), 0));
      } else {
        compare_flags.build(cfg);
        bool first = true;
        for (std::uint64_t seed : seed_list(cfg.get())) {
          Config run;
          check(sgf_config_clone(cfg.get(), run.out()));
          check(sgf_config_set(run.get(), "seed", std::to_string(seed).c_str()));
          Trainer t;
          check(sgf_trainer_new(run.get(), t.out()));
          check(sgf_trainer_run(t.get(), -1));
          check(sgf_compare_baselines(t.get(), nullptr, csv.c_str(), first ? 0 : 1));
          first = false;
          std::printf("seed %llu done\n", static_cast<unsigned long long>(seed));
          std::fflush(stdout);
        }
      }
      manifest(cfg.get(), "compare-baselines", dir, {"comparison.csv"}, start);
      std::printf("comparison in %s\n", csv.c_str());
    } else {
      for (int i = 0; i < 3; ++i) {
        if (!*sweeps[i]) continue;
        Config cfg;
        sweep_flags[i].build(cfg);
        const fs::path dir = prepare_out(out, sweep_names[i]);
        const std::string csv = (dir / "sweep.csv").string();
        check(sgf_sweep(cfg.get(), static_cast<sgf_sweep_kind>(i), csv.c_str(), sweep_progress,
                        nullptr));
        manifest(cfg.get(), sweep_names[i], dir, {"sweep.csv"}, start);
        std::printf("sweep in %s\n", csv.c_str());
      }
    }
  } catch (const Failure& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
