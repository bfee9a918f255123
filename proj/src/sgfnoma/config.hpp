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
#include <limits>
#include <string>
#include <vector>

namespace sgf {

enum class TopologyMode { fixed, poisson };
enum class Algorithm { ddqn, dueling_ddqn };

std::string to_string(TopologyMode mode);
std::string to_string(Algorithm algorithm);

// Physical-layer and protocol constants of one cell.
//
// Units: metres, watts, hertz. Rates reported by the simulator are spectral
// efficiencies log2(1 + SINR) in bits/s/Hz. QoS checks compare
// qos_rate_scale * log2(1 + SINR) against gb_target_rate / gf_target_rate,
// so the targets are expressed in whatever unit qos_rate_scale converts to
// (10 -> kbit/s on a 10 kHz sub-channel, 1 -> bits/s/Hz).
struct NetworkConfig {
  double cell_radius = 1000.0;
  double path_loss_exp = 3.0;
  double noise_power = 1e-12;  // -90 dBm per sub-channel
  double subchannel_bandwidth = 10e3;
  int num_subchannels = 3;

  double gb_target_rate = 15.0;
  double gf_target_rate = 4.0;
  double qos_rate_scale = 10.0;

  std::vector<double> power_levels = {0.1, 0.2, 0.3, 0.4, 0.5,
                                      0.6, 0.7, 0.8, 0.9};
  double max_user_power = 0.9;
  double max_channel_gf_power = std::numeric_limits<double>::infinity();
  double gb_power = 10.0;  // W; 1 W leaves the GB target nearly unreachable

  TopologyMode topology = TopologyMode::fixed;
  int num_gf = 12;
  int num_gb = 3;
  double gf_density = 12.0;
  double gb_density = 3.0;
  int max_gf_per_channel = 4;

  bool allow_idle = false;
  // When false the environment never redraws fading: every slot reuses the
  // gains already stored in the cell state (frozen instances).
  bool rayleigh_fading = true;

  double total_bandwidth() const {
    return subchannel_bandwidth * num_subchannels;
  }
  int num_power_levels() const { return static_cast<int>(power_levels.size()); }
  // Transmit actions are channel-major: index = channel * levels + level.
  // When allow_idle is set, one extra IDLE action follows them.
  int num_transmit_actions() const {
    return num_subchannels * num_power_levels();
  }
  int num_actions() const { return num_transmit_actions() + (allow_idle ? 1 : 0); }

  // Throws ConfigError naming the first violated invariant.
  void validate() const;
};

// Everything one training run needs, including the sweep axes.
struct ExperimentConfig {
  NetworkConfig network;

  int episodes = 500;
  int steps_per_episode = 100;
  double discount = 0.9;
  Algorithm algorithm = Algorithm::dueling_ddqn;

  std::vector<int> hidden_layers = {250, 120, 60};
  int stream_hidden = 60;
  double learning_rate = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  double grad_clip = 0.0;  // max global gradient norm; 0 disables

  int replay_capacity = 10000;
  int batch_size = 32;
  int target_sync_period = 1000;

  double epsilon_start = 1.0;
  double epsilon_end = 0.01;
  double epsilon_decay_fraction = 0.8;

  bool permute_observation = false;

  std::uint64_t seed = 1;
  std::vector<std::uint64_t> seeds = {1, 2, 3};

  int eval_episodes = 10;
  double pool_min_frequency = 0.05;
  int moving_average_window = 50;
  int open_loop_slots = 2000;
  int fresh_users = 12;
  double fixed_power_level = 0.9;

  std::vector<int> sweep_level_counts = {1, 3, 5, 7, 9};
  std::vector<int> sweep_cluster_sizes = {1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<int> sweep_agent_counts = {9, 12, 15, 24, 30};

  int num_agents() const { return network.num_gf; }
  long long total_steps() const {
    return static_cast<long long>(episodes) * steps_per_episode;
  }

  void validate() const;
};

// count levels spread evenly over [lo, hi]; a single level sits at the
// midpoint of the range.
std::vector<double> evenly_spaced_levels(double lo, double hi, int count);

}  // namespace sgf
