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

#include "sgfnoma/env_model.hpp"

#include <algorithm>
#include <cmath>

#include "sgfnoma/errors.hpp"

namespace sgf {

namespace {

// Relative slack on power-cap comparisons so that evenly spaced levels
// computed in floating point are not rejected by one ulp.
constexpr double kPowerSlack = 1e-12;
// Absolute slack on QoS comparisons (bits/s/Hz after scaling).
constexpr double kRateSlack = 1e-9;

bool valid_choice(const GfChoice& c, const NetworkConfig& config) {
  return c.subchannel >= 0 && c.subchannel < config.num_subchannels &&
         c.level >= 0 && c.level < config.num_power_levels();
}

}  // namespace

const GbUser* CellState::gb_on(int channel) const {
  for (const GbUser& gb : gb_users)
    if (gb.subchannel == channel) return &gb;
  return nullptr;
}

std::optional<GfChoice> decode_action(const NetworkConfig& config, int action) {
  const int levels = config.num_power_levels();
  if (action < 0 || action >= config.num_actions())
    throw DimensionError("action index " + std::to_string(action) +
                         " out of range");
  if (action >= config.num_transmit_actions()) return std::nullopt;
  return GfChoice{action / levels, action % levels};
}

int encode_action(const NetworkConfig& config,
                  const std::optional<GfChoice>& choice) {
  if (!choice) {
    if (!config.allow_idle) throw ConfigError("allow_idle: IDLE action disabled");
    return config.num_transmit_actions();
  }
  if (!valid_choice(*choice, config))
    throw DimensionError("choice outside the action space");
  return choice->subchannel * config.num_power_levels() + choice->level;
}

double distance_from_quantile(double u, double radius) {
  return radius * std::sqrt(u);
}

double fading_from_quantile(double u) { return -std::log(u); }

double distance_cdf(double r, double radius) {
  const double x = r / radius;
  return x * x;
}

double path_gain(double distance, double alpha) {
  return std::pow(distance, -alpha);
}

double rate_from_sinr(double sinr) { return std::log2(1.0 + sinr); }

CellState sample_topology(const NetworkConfig& config, Rng& rng) {
  config.validate();
  int n_gb = config.num_gb;
  int n_gf = config.num_gf;
  if (config.topology == TopologyMode::poisson) {
    // One GB user per sub-channel at most; surplus GB arrivals are not served.
    n_gb = std::min(static_cast<int>(rng.poisson(config.gb_density)),
                    config.num_subchannels);
    n_gf = static_cast<int>(rng.poisson(config.gf_density));
  }

  CellState state;
  state.gb_users.reserve(static_cast<std::size_t>(n_gb));
  for (int i = 0; i < n_gb; ++i)
    state.gb_users.push_back(
        {i, distance_from_quantile(rng.uniform_open0(), config.cell_radius), i});
  state.gf_distances.reserve(static_cast<std::size_t>(n_gf));
  for (int j = 0; j < n_gf; ++j)
    state.gf_distances.push_back(
        distance_from_quantile(rng.uniform_open0(), config.cell_radius));
  state.gb_fading.assign(static_cast<std::size_t>(n_gb), 1.0);
  state.gf_fading.assign(static_cast<std::size_t>(n_gf), 1.0);
  return state;
}

CellState sample_topology(const NetworkConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  return sample_topology(config, rng);
}

void draw_fading(CellState& state, Rng& rng) {
  for (double& h : state.gb_fading) h = rng.exponential();
  for (double& h : state.gf_fading) h = rng.exponential();
  ++state.slot_index;
}

CellState draw_fading(const CellState& state, std::uint64_t seed) {
  CellState next = state;
  Rng rng(seed);
  draw_fading(next, rng);
  return next;
}

DecodeOrder decoding_order(std::span<const Arrival> arrivals) {
  DecodeOrder result;
  result.order.assign(arrivals.begin(), arrivals.end());
  std::stable_sort(result.order.begin(), result.order.end(),
                   [](const Arrival& a, const Arrival& b) {
                     if (a.is_gb != b.is_gb) return a.is_gb;
                     if (a.received != b.received) return a.received > b.received;
                     return a.id < b.id;
                   });
  if (!result.order.empty() && result.order.front().is_gb) {
    const double gb = result.order.front().received;
    for (std::size_t k = 1; k < result.order.size(); ++k)
      if (result.order[k].received > gb) result.power_order_holds = false;
  }
  return result;
}

SlotOutcome compute_slot_rates(const CellState& state, const JointAction& action,
                               const NetworkConfig& config) {
  const int n_gf = state.num_gf();
  if (static_cast<int>(action.size()) != n_gf)
    throw DimensionError("joint action has " + std::to_string(action.size()) +
                         " entries for " + std::to_string(n_gf) + " GF users");
  const int M = config.num_subchannels;
  const double n0 = config.noise_power;
  const double gb_target = config.gb_target_rate / config.qos_rate_scale;
  const double gf_target = config.gf_target_rate / config.qos_rate_scale;

  SlotOutcome out;
  out.gf_received.assign(static_cast<std::size_t>(n_gf), 0.0);
  out.gf_rates.assign(static_cast<std::size_t>(n_gf), 0.0);
  out.gb_received.assign(state.gb_users.size(), 0.0);
  out.gb_rates.assign(state.gb_users.size(), 0.0);
  out.gb_active.assign(state.gb_users.size(), false);
  out.channels.resize(static_cast<std::size_t>(M));

  std::vector<std::vector<Arrival>> per_channel(static_cast<std::size_t>(M));
  for (std::size_t i = 0; i < state.gb_users.size(); ++i) {
    const GbUser& gb = state.gb_users[i];
    if (gb.subchannel < 0 || gb.subchannel >= M) continue;
    out.gb_active[i] = true;
    const double rx = config.gb_power * state.gb_fading[i] *
                      path_gain(gb.distance, config.path_loss_exp);
    out.gb_received[i] = rx;
    per_channel[static_cast<std::size_t>(gb.subchannel)].push_back(
        {gb.id, true, rx});
  }
  for (int j = 0; j < n_gf; ++j) {
    const auto& choice = action[static_cast<std::size_t>(j)];
    if (!choice || !valid_choice(*choice, config)) continue;
    const double p = config.power_levels[static_cast<std::size_t>(choice->level)];
    const double rx = p * state.gf_fading[static_cast<std::size_t>(j)] *
                      path_gain(state.gf_distances[static_cast<std::size_t>(j)],
                                config.path_loss_exp);
    out.gf_received[static_cast<std::size_t>(j)] = rx;
    auto& ch = out.channels[static_cast<std::size_t>(choice->subchannel)];
    ch.gf_interference += rx;
    ch.gf_tx_power += p;
    ++ch.gf_count;
    per_channel[static_cast<std::size_t>(choice->subchannel)].push_back({j, false, rx});
  }

  for (int m = 0; m < M; ++m) {
    auto& ch = out.channels[static_cast<std::size_t>(m)];
    DecodeOrder order = decoding_order(per_channel[static_cast<std::size_t>(m)]);
    ch.power_order_holds = order.power_order_holds;
    ch.decode_order = std::move(order.order);

    // Interference seen by the user at each decode position is the received
    // power of everyone decoded after it.
    const std::size_t n = ch.decode_order.size();
    std::vector<double> later(n, 0.0);
    double tail = 0.0;
    for (std::size_t k = n; k-- > 0;) {
      later[k] = tail;
      tail += ch.decode_order[k].received;
    }

    bool decoding = true;
    for (std::size_t k = 0; k < n; ++k) {
      const Arrival& a = ch.decode_order[k];
      const double rate = rate_from_sinr(a.received / (later[k] + n0));
      const double target = a.is_gb ? gb_target : gf_target;
      if (a.is_gb) {
        ch.has_gb = true;
        out.gb_rates[static_cast<std::size_t>(a.id)] = rate;
      } else {
        out.gf_rates[static_cast<std::size_t>(a.id)] = rate;
      }
      out.capacity += rate;
      decoding = decoding && rate >= target - kRateSlack / config.qos_rate_scale;
      if (decoding) ch.decoded_rate += rate;
    }
    out.decoded_throughput += ch.decoded_rate;
  }
  return out;
}

bool gb_meets_target(double rate, const NetworkConfig& config) {
  return config.qos_rate_scale * rate >= config.gb_target_rate - kRateSlack;
}

bool gf_meets_target(double rate, const NetworkConfig& config) {
  return config.qos_rate_scale * rate >= config.gf_target_rate - kRateSlack;
}

ConstraintReport check_constraints(const SlotOutcome& outcome,
                                   const JointAction& action,
                                   const NetworkConfig& config) {
  ConstraintReport r;
  const double pmax = config.max_user_power * (1.0 + kPowerSlack);
  for (const auto& choice : action) {
    if (!choice) continue;
    if (!valid_choice(*choice, config)) {
      r.single_channel = false;
      continue;
    }
    if (config.power_levels[static_cast<std::size_t>(choice->level)] > pmax)
      r.power_limit = false;
  }
  for (const ChannelOutcome& ch : outcome.channels) {
    if (!ch.power_order_holds) r.decode_order = false;
    if (ch.gf_tx_power > config.max_channel_gf_power * (1.0 + kPowerSlack))
      r.power_limit = false;
    const int users = ch.gf_count + (ch.has_gb ? 1 : 0);
    if (users == 1) r.min_cluster = false;
    if (ch.gf_count > config.max_gf_per_channel) r.max_gf = false;
  }
  for (std::size_t i = 0; i < outcome.gb_rates.size(); ++i)
    if (outcome.gb_active[i] && !gb_meets_target(outcome.gb_rates[i], config))
      r.gb_qos = false;
  for (std::size_t j = 0; j < action.size() && j < outcome.gf_rates.size(); ++j) {
    if (!action[j] || !valid_choice(*action[j], config)) continue;
    if (!gf_meets_target(outcome.gf_rates[j], config)) r.gf_qos = false;
  }
  return r;
}

std::vector<double> interference_thresholds(const CellState& state,
                                            const NetworkConfig& config) {
  std::vector<double> phi(static_cast<std::size_t>(config.num_subchannels),
                          std::numeric_limits<double>::infinity());
  const double sinr_needed =
      std::exp2(config.gb_target_rate / config.qos_rate_scale) - 1.0;
  for (std::size_t i = 0; i < state.gb_users.size(); ++i) {
    const GbUser& gb = state.gb_users[i];
    if (gb.subchannel < 0 || gb.subchannel >= config.num_subchannels) continue;
    const double rx = config.gb_power * state.gb_fading[i] *
                      path_gain(gb.distance, config.path_loss_exp);
    phi[static_cast<std::size_t>(gb.subchannel)] =
        std::max(0.0, rx / sinr_needed - config.noise_power);
  }
  return phi;
}

StepResult evaluate_step(const CellState& state, const JointAction& action,
                         double previous_capacity, const NetworkConfig& config) {
  StepResult res;
  res.outcome = compute_slot_rates(state, action, config);
  res.outcome.report = check_constraints(res.outcome, action, config);
  res.next_state = res.outcome.gf_rates;
  if (res.outcome.report.all() && res.outcome.capacity >= previous_capacity)
    res.reward = res.outcome.capacity;
  return res;
}

Environment::Environment(NetworkConfig config, CellState topology)
    : config_(std::move(config)), state_(std::move(topology)) {
  observation_.assign(static_cast<std::size_t>(state_.num_gf()), 0.0);
}

void Environment::reset(std::uint64_t fading_seed) {
  fading_rng_ = Rng(fading_seed);
  if (config_.rayleigh_fading) draw_fading(state_, fading_rng_);
  std::fill(observation_.begin(), observation_.end(), 0.0);
  previous_capacity_ = 0.0;
}

StepResult Environment::step(const JointAction& action) {
  StepResult res = evaluate_step(state_, action, previous_capacity_, config_);
  previous_capacity_ = res.outcome.capacity;
  observation_ = res.next_state;
  if (config_.rayleigh_fading) draw_fading(state_, fading_rng_);
  return res;
}

}  // namespace sgf
