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

#include "sgfnoma/power_pool.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "sgfnoma/errors.hpp"

namespace sgf {

namespace {

constexpr long long kMinPoolSlots = 100;

int draw(Rng& rng, int n) {
  return std::min(n - 1, static_cast<int>(rng.uniform01() * n));
}

}  // namespace

std::vector<int> PowerPoolSet::level_indices(int channel) const {
  std::vector<int> out;
  for (const PoolLevel& l : channels.at(static_cast<std::size_t>(channel)).levels)
    out.push_back(l.level);
  return out;
}

PowerPoolSet extract_pools(const std::vector<EvalSlot>& slots, const NetworkConfig& config,
                           const CellState& topology, double min_frequency) {
  if (static_cast<long long>(slots.size()) < kMinPoolSlots)
    throw ConfigError("eval_episodes: pool extraction needs at least " +
                      std::to_string(kMinPoolSlots) + " evaluation slots");
  const int M = config.num_subchannels;
  const int P = config.num_power_levels();
  std::vector<std::vector<long long>> counts(static_cast<std::size_t>(M),
                                             std::vector<long long>(static_cast<std::size_t>(P)));
  for (const EvalSlot& slot : slots)
    for (int a : slot.actions) {
      if (a < 0) continue;
      const auto c = decode_action(config, a);
      if (c) ++counts[static_cast<std::size_t>(c->subchannel)][static_cast<std::size_t>(c->level)];
    }

  CellState mean_cell = topology;
  std::fill(mean_cell.gb_fading.begin(), mean_cell.gb_fading.end(), 1.0);
  const std::vector<double> phi = interference_thresholds(mean_cell, config);
  const double median_gain =
      path_gain(distance_from_quantile(0.5, config.cell_radius), config.path_loss_exp);

  PowerPoolSet set;
  set.min_frequency = min_frequency;
  set.channels.resize(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) {
    ChannelPool& pool = set.channels[static_cast<std::size_t>(m)];
    const auto& row = counts[static_cast<std::size_t>(m)];
    pool.phi = phi[static_cast<std::size_t>(m)];
    for (long long c : row) pool.selections += c;

    std::vector<int> kept;
    if (pool.selections == 0) {
      pool.defaulted = true;
      kept.push_back(static_cast<int>(
          std::min_element(config.power_levels.begin(), config.power_levels.end()) -
          config.power_levels.begin()));
    } else {
      for (int p = 0; p < P; ++p)
        if (static_cast<double>(row[static_cast<std::size_t>(p)]) >
            min_frequency * static_cast<double>(pool.selections))
          kept.push_back(p);
      if (kept.empty())
        kept.push_back(static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()));
    }

    long long kept_total = 0;
    for (int p : kept) kept_total += row[static_cast<std::size_t>(p)];
    for (int p : kept) {
      PoolLevel level;
      level.level = p;
      level.power = config.power_levels[static_cast<std::size_t>(p)];
      const auto c = static_cast<double>(row[static_cast<std::size_t>(p)]);
      level.raw_frequency = pool.selections > 0 ? c / static_cast<double>(pool.selections) : 0.0;
      level.frequency = kept_total > 0 ? c / static_cast<double>(kept_total)
                                       : 1.0 / static_cast<double>(kept.size());
      level.exceeds_threshold = level.power * median_gain > pool.phi;
      pool.levels.push_back(level);
    }
  }
  return set;
}

BroadcastMessage make_broadcast(const PowerPoolSet& pools, const NetworkConfig& config) {
  BroadcastMessage msg;
  for (const ChannelPool& ch : pools.channels) {
    std::vector<double> watts;
    for (const PoolLevel& l : ch.levels) watts.push_back(l.power);
    msg.pools.push_back(std::move(watts));
    msg.phi.push_back(ch.phi);
  }
  msg.gb_target_rate = config.gb_target_rate;
  msg.gf_target_rate = config.gf_target_rate;
  return msg;
}

Policy pool_policy(const PowerPoolSet& pools, const NetworkConfig& config) {
  if (static_cast<int>(pools.channels.size()) != config.num_subchannels)
    throw DimensionError("pool set does not cover every sub-channel");
  for (const ChannelPool& ch : pools.channels)
    if (ch.levels.empty()) throw DimensionError("empty power pool");
  const int M = config.num_subchannels;
  return [pools, M](const std::vector<double>&, const CellState& cell, Rng& rng) {
    JointAction joint(static_cast<std::size_t>(cell.num_gf()));
    for (auto& choice : joint) {
      const int m = draw(rng, M);
      const auto& levels = pools.channels[static_cast<std::size_t>(m)].levels;
      const int k = draw(rng, static_cast<int>(levels.size()));
      choice = GfChoice{m, levels[static_cast<std::size_t>(k)].level};
    }
    return joint;
  };
}

Policy fixed_level_policy(const NetworkConfig& config, int level) {
  if (level < 0 || level >= config.num_power_levels())
    throw ConfigError("fixed_power_level: not a configured level");
  const int M = config.num_subchannels;
  return [M, level](const std::vector<double>&, const CellState& cell, Rng& rng) {
    JointAction joint(static_cast<std::size_t>(cell.num_gf()));
    for (auto& choice : joint) {
      const int m = draw(rng, M);
      (void)rng.uniform01();  // keep channel draws aligned with pooled protocols
      choice = GfChoice{m, level};
    }
    return joint;
  };
}

Policy uniform_level_policy(const NetworkConfig& config) {
  const int M = config.num_subchannels;
  const int P = config.num_power_levels();
  return [M, P](const std::vector<double>&, const CellState& cell, Rng& rng) {
    JointAction joint(static_cast<std::size_t>(cell.num_gf()));
    for (auto& choice : joint) {
      const int m = draw(rng, M);
      choice = GfChoice{m, draw(rng, P)};
    }
    return joint;
  };
}

int nearest_level(const NetworkConfig& config, double watts) {
  int best = 0;
  for (int p = 1; p < config.num_power_levels(); ++p)
    if (std::abs(config.power_levels[static_cast<std::size_t>(p)] - watts) <
        std::abs(config.power_levels[static_cast<std::size_t>(best)] - watts))
      best = p;
  return best;
}

EvalSchedule OpenLoopOptions::schedule(bool remove_gb) const {
  EvalSchedule s;
  s.steps = std::max(1, steps_per_episode);
  s.episodes = std::max(1, (slots + s.steps - 1) / s.steps);
  s.seed = seed;
  s.fresh_users = fresh_users;
  s.remove_gb = remove_gb;
  return s;
}

ThroughputStats open_loop_simulate(const PowerPoolSet& pools, const NetworkConfig& config,
                                   const CellState& topology, const OpenLoopOptions& options) {
  return summarize(run_policy(config, topology, pool_policy(pools, config), options.schedule()));
}

ThroughputStats baseline_fpa(const NetworkConfig& config, int level,
                             const CellState& topology, const OpenLoopOptions& options) {
  return summarize(
      run_policy(config, topology, fixed_level_policy(config, level), options.schedule()));
}

ThroughputStats baseline_fixed_sgf(const NetworkConfig& config, double fixed_power,
                                   const CellState& topology, const OpenLoopOptions& options) {
  return baseline_fpa(config, nearest_level(config, fixed_power), topology, options);
}

ThroughputStats baseline_pure_gf(const NetworkConfig& config, const CellState& topology,
                                 const OpenLoopOptions& options, PureGfPower mode,
                                 double fixed_power) {
  const Policy policy = mode == PureGfPower::fixed
                            ? fixed_level_policy(config, nearest_level(config, fixed_power))
                            : uniform_level_policy(config);
  return summarize(run_policy(config, topology, policy, options.schedule(true)));
}

PowerPoolSet extract_trainer_pools(const Trainer& trainer) {
  const ExperimentConfig& cfg = trainer.config();
  return extract_pools(run_greedy_evaluation(trainer, cfg.eval_episodes), cfg.network,
                       trainer.topology(), cfg.pool_min_frequency);
}

std::vector<ProtocolResult> compare_protocols(const Trainer& trainer,
                                              const PowerPoolSet& pools) {
  const ExperimentConfig& cfg = trainer.config();
  const NetworkConfig& net = cfg.network;
  const std::uint64_t seed = cfg.seed;
  std::vector<ProtocolResult> rows;

  OpenLoopOptions same_users;
  same_users.fresh_users = -1;
  same_users.slots = cfg.eval_episodes * cfg.steps_per_episode;
  same_users.steps_per_episode = cfg.steps_per_episode;
  same_users.seed = seed;
  rows.push_back({"learned", seed,
                  summarize(run_policy(net, trainer.topology(),
                                       agent_policy(trainer.agents(), net,
                                                    cfg.permute_observation, 0.0),
                                       same_users.schedule()))});
  rows.push_back({"fixed_sgf", seed,
                  baseline_fixed_sgf(net, cfg.fixed_power_level, trainer.topology(),
                                     same_users)});
  rows.push_back({"pure_gf", seed,
                  baseline_pure_gf(net, trainer.topology(), same_users, PureGfPower::fixed,
                                   cfg.fixed_power_level)});

  OpenLoopOptions fresh;
  fresh.fresh_users = cfg.fresh_users;
  fresh.slots = cfg.open_loop_slots;
  fresh.steps_per_episode = cfg.steps_per_episode;
  fresh.seed = seed;
  rows.push_back({"open_loop_pool", seed, open_loop_simulate(pools, net, trainer.topology(), fresh)});
  for (int p = 0; p < net.num_power_levels(); ++p) {
    char name[32];
    std::snprintf(name, sizeof name, "fpa_%.2f", net.power_levels[static_cast<std::size_t>(p)]);
    rows.push_back({name, seed, baseline_fpa(net, p, trainer.topology(), fresh)});
  }
  return rows;
}

}  // namespace sgf
