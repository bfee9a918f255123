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

#include "sgfnoma/config.hpp"

#include <cmath>

#include "sgfnoma/errors.hpp"

namespace sgf {

namespace {

void require(bool ok, const char* key, const char* what) {
  if (!ok) throw ConfigError(std::string(key) + ": " + what);
}

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

}  // namespace

std::string to_string(TopologyMode mode) {
  return mode == TopologyMode::fixed ? "fixed" : "poisson";
}

std::string to_string(Algorithm algorithm) {
  return algorithm == Algorithm::ddqn ? "ddqn" : "dueling";
}

void NetworkConfig::validate() const {
  require(positive_finite(cell_radius), "cell_radius", "must be > 0");
  require(std::isfinite(path_loss_exp) && path_loss_exp > 2.0, "path_loss_exp",
          "must be > 2");
  require(positive_finite(noise_power), "noise_power", "must be > 0");
  require(positive_finite(subchannel_bandwidth), "subchannel_bandwidth",
          "must be > 0");
  require(num_subchannels >= 1, "num_subchannels", "must be >= 1");
  require(positive_finite(gf_target_rate), "gf_target_rate", "must be > 0");
  require(std::isfinite(gb_target_rate), "gb_target_rate", "must be finite");
  require(gf_target_rate <= gb_target_rate, "gf_target_rate",
          "must not exceed gb_target_rate");
  require(positive_finite(qos_rate_scale), "qos_rate_scale", "must be > 0");
  require(!power_levels.empty(), "power_levels", "must not be empty");
  for (std::size_t i = 0; i < power_levels.size(); ++i) {
    require(positive_finite(power_levels[i]), "power_levels",
            "every level must be > 0");
    if (i > 0)
      require(power_levels[i] > power_levels[i - 1], "power_levels",
              "must be strictly increasing");
  }
  require(positive_finite(max_user_power), "max_user_power", "must be > 0");
  require(max_channel_gf_power > 0.0, "max_channel_gf_power", "must be > 0");
  require(positive_finite(gb_power), "gb_power", "must be > 0");
  require(num_gf >= 0, "num_gf", "must be >= 0");
  require(num_gb >= 0, "num_gb", "must be >= 0");
  require(std::isfinite(gf_density) && gf_density >= 0.0, "gf_density",
          "must be >= 0");
  require(std::isfinite(gb_density) && gb_density >= 0.0, "gb_density",
          "must be >= 0");
  require(max_gf_per_channel >= 1, "max_gf_per_channel", "must be >= 1");
  if (topology == TopologyMode::fixed)
    require(num_gb <= num_subchannels, "num_gb",
            "more GB users than sub-channels");
}

void ExperimentConfig::validate() const {
  network.validate();
  require(episodes >= 1, "episodes", "must be >= 1");
  require(steps_per_episode >= 1, "steps_per_episode", "must be >= 1");
  require(std::isfinite(discount) && discount > 0.0 && discount <= 1.0,
          "discount", "must lie in (0, 1]");
  require(!hidden_layers.empty(), "hidden_layers", "must not be empty");
  for (int h : hidden_layers) require(h >= 1, "hidden_layers", "sizes must be >= 1");
  require(stream_hidden >= 1, "stream_hidden", "must be >= 1");
  require(positive_finite(learning_rate), "learning_rate", "must be > 0");
  require(adam_beta1 >= 0.0 && adam_beta1 < 1.0, "adam_beta1", "must lie in [0, 1)");
  require(adam_beta2 >= 0.0 && adam_beta2 < 1.0, "adam_beta2", "must lie in [0, 1)");
  require(positive_finite(adam_epsilon), "adam_epsilon", "must be > 0");
  require(std::isfinite(grad_clip) && grad_clip >= 0.0, "grad_clip", "must be >= 0");
  require(batch_size >= 1, "batch_size", "must be >= 1");
  require(replay_capacity >= batch_size, "replay_capacity",
          "must be >= batch_size");
  require(target_sync_period >= 1, "target_sync_period", "must be >= 1");
  require(epsilon_end >= 0.0 && epsilon_end <= epsilon_start &&
              epsilon_start <= 1.0,
          "epsilon_end", "need 0 <= epsilon_end <= epsilon_start <= 1");
  require(epsilon_decay_fraction > 0.0 && epsilon_decay_fraction <= 1.0,
          "epsilon_decay_fraction", "must lie in (0, 1]");
  require(!seeds.empty(), "seeds", "must not be empty");
  require(eval_episodes >= 1, "eval_episodes", "must be >= 1");
  require(pool_min_frequency >= 0.0 && pool_min_frequency < 1.0,
          "pool_min_frequency", "must lie in [0, 1)");
  require(moving_average_window >= 1, "moving_average_window", "must be >= 1");
  require(open_loop_slots >= 1, "open_loop_slots", "must be >= 1");
  require(fresh_users >= 0, "fresh_users", "must be >= 0");
  require(positive_finite(fixed_power_level), "fixed_power_level", "must be > 0");
  for (int c : sweep_level_counts)
    require(c >= 1, "sweep_level_counts", "counts must be >= 1");
  for (int k : sweep_cluster_sizes)
    require(k >= 0, "sweep_cluster_sizes", "sizes must be >= 0");
  for (int n : sweep_agent_counts)
    require(n >= 1, "sweep_agent_counts", "counts must be >= 1");
}

std::vector<double> evenly_spaced_levels(double lo, double hi, int count) {
  if (count < 1) throw ConfigError("level count must be >= 1");
  if (!(hi >= lo)) throw ConfigError("level range is empty");
  if (count == 1) return {0.5 * (lo + hi)};
  std::vector<double> levels(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    levels[static_cast<std::size_t>(i)] =
        lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
  return levels;
}

}  // namespace sgf
