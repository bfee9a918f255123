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

#include <cstdint>
#include <string>
#include <vector>

#include "sgfnoma/config.hpp"
#include "sgfnoma/env_model.hpp"
#include "sgfnoma/training.hpp"

namespace sgf {

struct PoolLevel {
  int level = 0;               // index into NetworkConfig::power_levels
  double power = 0.0;          // watts
  double frequency = 0.0;      // share among kept levels; sums to 1 per channel
  double raw_frequency = 0.0;  // share among all selections on the channel
  // Expected interference at the GB receiver from a median-distance user
  // exceeds the channel threshold.
  bool exceeds_threshold = false;
};

struct ChannelPool {
  std::vector<PoolLevel> levels;
  long long selections = 0;
  double phi = 0.0;        // tolerable aggregate GF interference, watts
  bool defaulted = false;  // channel never selected; lowest level used
};

struct PowerPoolSet {
  std::vector<ChannelPool> channels;
  double min_frequency = 0.05;

  // Level indices of channel m.
  std::vector<int> level_indices(int channel) const;
};

// What the base station announces.
struct BroadcastMessage {
  std::vector<std::vector<double>> pools;  // watts per channel
  std::vector<double> phi;
  double gb_target_rate = 0.0;
  double gf_target_rate = 0.0;
};

// Frequency-thresholded pools from evaluation slots. Levels whose share on a
// channel exceeds min_frequency are kept; if none is, the most frequent one
// is. Thresholds use unit (mean) fading on `topology`.
PowerPoolSet extract_pools(const std::vector<EvalSlot>& slots, const NetworkConfig& config,
                           const CellState& topology, double min_frequency);

BroadcastMessage make_broadcast(const PowerPoolSet& pools, const NetworkConfig& config);

// Open-loop protocols. Every user draws two uniforms per slot, one for the
// channel and one for the level, so protocols sharing a schedule also share
// channel choices.
Policy pool_policy(const PowerPoolSet& pools, const NetworkConfig& config);
Policy fixed_level_policy(const NetworkConfig& config, int level);
Policy uniform_level_policy(const NetworkConfig& config);

// Index of the configured level nearest to `watts`.
int nearest_level(const NetworkConfig& config, double watts);

struct OpenLoopOptions {
  int fresh_users = 12;  // negative: reuse the topology's GF users
  int slots = 2000;
  int steps_per_episode = 100;
  std::uint64_t seed = 1;

  EvalSchedule schedule(bool remove_gb = false) const;
};

ThroughputStats open_loop_simulate(const PowerPoolSet& pools, const NetworkConfig& config,
                                   const CellState& topology, const OpenLoopOptions& options);
ThroughputStats baseline_fpa(const NetworkConfig& config, int level,
                             const CellState& topology, const OpenLoopOptions& options);
// FPA at the configured fixed level, in a cell with GB users present.
ThroughputStats baseline_fixed_sgf(const NetworkConfig& config, double fixed_power,
                                   const CellState& topology, const OpenLoopOptions& options);

enum class PureGfPower { fixed, uniform };
// No GB users: every GF user transmits and SIC runs over GF users only.
ThroughputStats baseline_pure_gf(const NetworkConfig& config, const CellState& topology,
                                 const OpenLoopOptions& options,
                                 PureGfPower mode = PureGfPower::fixed,
                                 double fixed_power = 0.9);

struct ProtocolResult {
  std::string protocol;
  std::uint64_t seed = 0;
  ThroughputStats stats;
};

// Paired comparison for one trained run:
//   learned, fixed_sgf, pure_gf         on the training topology
//   open_loop_pool, fpa_<watts> (each)  with fresh users
// Both groups use evaluation fading derived from the run's seed.
std::vector<ProtocolResult> compare_protocols(const Trainer& trainer,
                                              const PowerPoolSet& pools);

// Pools extracted from a greedy evaluation of the trainer's agents.
PowerPoolSet extract_trainer_pools(const Trainer& trainer);

}  // namespace sgf
