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

#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sgfnoma/agents.hpp"
#include "sgfnoma/config.hpp"
#include "sgfnoma/env_model.hpp"

namespace sgf {

inline constexpr int kNumConstraints = 7;
// Column order of constraint flags everywhere they are written out.
inline constexpr std::array<const char*, kNumConstraints> kConstraintNames = {
    "decode_order", "power_limit", "single_channel", "min_cluster",
    "gb_qos",       "gf_qos",      "max_gf"};

std::array<bool, kNumConstraints> constraint_flags(const ConstraintReport& r);

// One training step as seen by the metrics sinks.
struct StepRecord {
  int episode = 0;
  int step = 0;
  double reward = 0.0;
  double capacity = 0.0;
  double decoded_throughput = 0.0;
  ConstraintReport report;
  double epsilon = 0.0;
  std::vector<double> losses;    // NaN for agents that did not update
  std::vector<int> actions;
  std::vector<double> gf_rates;
  std::vector<double> gb_rates;
};

struct EpisodeSummary {
  int episode = 0;
  double mean_reward = 0.0;
  double mean_capacity = 0.0;
  double mean_throughput = 0.0;
  double constraint_rate = 0.0;  // fraction of slots where every constraint held
  std::array<int, kNumConstraints> violations{};
  double mean_loss = 0.0;        // over agents and steps that updated; 0 if none
  double final_epsilon = 0.0;
};

using StepObserver = std::function<void(const StepRecord&)>;

// Trailing mean over at most `window` entries ending at each index.
std::vector<double> moving_average(const std::vector<double>& values, int window);

// First index whose moving average reaches fraction * (last moving average).
// Returns 0 for empty input or a non-positive final average.
int plateau_episode(const std::vector<double>& values, int window,
                    double fraction = 0.9);

// Observation handed to agent j: the broadcast rate vector, optionally
// rotated so that agent j's own rate comes first.
std::vector<Real> agent_observation(const std::vector<double>& rates, int agent,
                                    bool permute);

// Multi-agent training loop. Topology is drawn once per run; each episode
// redraws fading from its own seed and resets the observation to zeros.
class Trainer {
 public:
  explicit Trainer(ExperimentConfig config);
  Trainer(ExperimentConfig config, CellState topology);

  const ExperimentConfig& config() const { return config_; }
  const CellState& topology() const { return topology_; }
  std::vector<Agent>& agents() { return agents_; }
  const std::vector<Agent>& agents() const { return agents_; }
  const std::vector<EpisodeSummary>& history() const { return history_; }
  int episodes_completed() const { return static_cast<int>(history_.size()); }
  long long global_step() const { return global_step_; }
  bool finished() const { return episodes_completed() >= config_.episodes; }
  const EpsilonSchedule& schedule() const { return schedule_; }

  EpisodeSummary run_episode(const StepObserver& observer = {});
  // Runs up to `count` further episodes (all remaining when negative).
  void run(int count = -1, const StepObserver& observer = {});

  // Used by checkpoint loading.
  void restore_progress(long long global_step, std::vector<EpisodeSummary> history);

  std::vector<double> episode_rewards() const;

 private:
  ExperimentConfig config_;
  CellState topology_;
  std::vector<Agent> agents_;
  EpsilonSchedule schedule_;
  long long global_step_ = 0;
  std::vector<EpisodeSummary> history_;
};

// Per-slot outcome of a policy evaluation.
struct EvalSlot {
  int episode = 0;
  int step = 0;
  std::vector<int> actions;  // -1 for idle users
  double reward = 0.0;
  double capacity = 0.0;
  double decoded_throughput = 0.0;
  ConstraintReport report;
  std::vector<double> gf_rates;
  std::vector<double> gb_rates;
  std::vector<bool> gb_active;
  int gb_violations = 0;  // active GB users below tau this slot
};

// Protocol under evaluation: maps (observation, cell) to a joint action.
// The rng is private to the protocol and seeded per episode.
using Policy = std::function<JointAction(const std::vector<double>& observation,
                                         const CellState& cell, Rng& rng)>;

struct EvalSchedule {
  int episodes = 10;
  int steps = 100;
  std::uint64_t seed = 1;
  // Negative: keep the topology's GF users. Otherwise every episode draws
  // this many GF users at fresh positions (GB users are kept).
  int fresh_users = -1;
  // Park GB users off-channel (pure grant-free cell).
  bool remove_gb = false;
};

// Runs `policy` over the schedule. Fading per episode comes from the
// schedule seed, so two policies evaluated with the same schedule see the
// same channels and, with fresh users, the same positions.
std::vector<EvalSlot> run_policy(const NetworkConfig& config, const CellState& topology,
                                 const Policy& policy, const EvalSchedule& schedule);

Policy agent_policy(const std::vector<Agent>& agents, const NetworkConfig& config,
                    bool permute, double epsilon);

// Greedy (epsilon = 0 unless overridden) roll-out of trained agents on their
// training topology with evaluation fading.
std::vector<EvalSlot> run_greedy_evaluation(const Trainer& trainer, int episodes,
                                            double epsilon = 0.0);

struct ThroughputStats {
  long long slots = 0;
  double mean_capacity = 0.0;
  double mean_throughput = 0.0;     // QoS-qualified decoded sum rate
  double mean_reward = 0.0;
  double constraint_rate = 0.0;     // slots with every constraint satisfied
  double gb_violation_rate = 0.0;   // active GB user-slots below tau
  double mean_gf_rate = 0.0;        // over transmitting GF user-slots
};

ThroughputStats summarize(const std::vector<EvalSlot>& slots);

struct RunSummary {
  std::uint64_t seed = 0;
  std::vector<double> episode_rewards;
  std::vector<double> moving_average;
  double final_average = 0.0;
  int plateau = 0;
  ThroughputStats eval;
  double seconds = 0.0;
};

RunSummary summarize_run(const Trainer& trainer);

// Trains one run to completion and evaluates the greedy policy.
RunSummary train_and_evaluate(const ExperimentConfig& config,
                              const StepObserver& observer = {});

struct SweepRow {
  std::string axis;
  int value = 0;
  RunSummary run;
};

using SweepProgress = std::function<void(const SweepRow&)>;

// Power levels spread evenly over the configured [min, max] range.
ExperimentConfig with_level_count(const ExperimentConfig& base, int count);
// k GF users per channel: N_GF = k * M and L_s = k.
ExperimentConfig with_cluster_size(const ExperimentConfig& base, int k);
// N GF users; L_s raised to ceil(N / M) when needed.
ExperimentConfig with_agent_count(const ExperimentConfig& base, int n);

std::vector<SweepRow> sweep_power_levels(const ExperimentConfig& config,
                                         const SweepProgress& progress = {});
std::vector<SweepRow> sweep_cluster_size(const ExperimentConfig& config,
                                         const SweepProgress& progress = {});
std::vector<SweepRow> sweep_agent_count(const ExperimentConfig& config,
                                        const SweepProgress& progress = {});

}  // namespace sgf
