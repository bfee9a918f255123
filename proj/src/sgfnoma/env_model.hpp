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
#include <optional>
#include <span>
#include <vector>

#include "sgfnoma/config.hpp"
#include "sgfnoma/rng.hpp"

namespace sgf {

struct GbUser {
  int id = 0;
  double distance = 0.0;
  int subchannel = 0;
};

// Positions and the current slot's small-scale fading of every user.
// GF users are identified by their index (0..N_GF-1); GB ids are 0..N_GB-1.
struct CellState {
  std::vector<GbUser> gb_users;
  std::vector<double> gf_distances;
  std::vector<double> gb_fading;  // |h|^2, unit-mean exponential
  std::vector<double> gf_fading;
  std::uint64_t slot_index = 0;

  int num_gf() const { return static_cast<int>(gf_distances.size()); }
  int num_gb() const { return static_cast<int>(gb_users.size()); }
  // GB user holding `channel`, or nullptr.
  const GbUser* gb_on(int channel) const;
};

struct GfChoice {
  int subchannel = 0;
  int level = 0;  // index into NetworkConfig::power_levels
  friend bool operator==(const GfChoice&, const GfChoice&) = default;
};

// One entry per GF user; nullopt means IDLE.
using JointAction = std::vector<std::optional<GfChoice>>;

// Maps between flat action indices and (channel, level) choices.
std::optional<GfChoice> decode_action(const NetworkConfig& config, int action);
int encode_action(const NetworkConfig& config, const std::optional<GfChoice>& choice);

// Signal arriving on one sub-channel.
struct Arrival {
  int id = 0;
  bool is_gb = false;
  double received = 0.0;  // P * |h|^2 * r^-alpha, watts
};

struct DecodeOrder {
  std::vector<Arrival> order;  // GB first, then GF by descending power
  bool power_order_holds = true;
};

// Each flag is true when the constraint holds for the slot.
struct ConstraintReport {
  bool decode_order = true;   // GB received power >= every GF on its channel
  bool power_limit = true;    // per-user <= Pmax and per-channel aggregate cap
  bool single_channel = true; // every transmitting user on exactly one valid channel
  bool min_cluster = true;    // every occupied channel has >= 2 users
  bool gb_qos = true;         // every GB QoS rate >= tau
  bool gf_qos = true;         // every transmitting GF QoS rate >= tau_bar
  bool max_gf = true;         // GF users per channel <= L_s

  bool all() const {
    return decode_order && power_limit && single_channel && min_cluster &&
           gb_qos && gf_qos && max_gf;
  }
};

struct ChannelOutcome {
  std::vector<Arrival> decode_order;
  bool power_order_holds = true;
  double gf_interference = 0.0;  // sum of GF received power, watts
  double gf_tx_power = 0.0;      // sum of GF transmit power, watts
  int gf_count = 0;
  bool has_gb = false;
  // Sum rate of users the receiver decodes successfully when SIC stops at
  // the first user that misses its QoS target.
  double decoded_rate = 0.0;
};

struct SlotOutcome {
  std::vector<double> gf_received;  // watts, 0 for idle users
  std::vector<double> gb_received;
  std::vector<double> gf_rates;     // bits/s/Hz, 0 for idle users
  std::vector<double> gb_rates;
  std::vector<bool> gb_active;      // false for GB users parked off-channel
  std::vector<ChannelOutcome> channels;
  double capacity = 0.0;            // sum of all rates this slot
  double decoded_throughput = 0.0;  // sum of ChannelOutcome::decoded_rate
  ConstraintReport report;
};

// Inverse CDF of the in-disk distance density 2r/R^2.
double distance_from_quantile(double u, double radius);
// Unit-mean exponential |h|^2 at quantile u in (0, 1]: -ln u.
double fading_from_quantile(double u);
double distance_cdf(double r, double radius);
double path_gain(double distance, double alpha);
double rate_from_sinr(double sinr);

CellState sample_topology(const NetworkConfig& config, Rng& rng);
CellState sample_topology(const NetworkConfig& config, std::uint64_t seed);

// Redraws |h|^2 for every user and advances slot_index.
void draw_fading(CellState& state, Rng& rng);
CellState draw_fading(const CellState& state, std::uint64_t seed);

DecodeOrder decoding_order(std::span<const Arrival> arrivals);

// Rates of every user for one slot. The constraint report is left at its
// default; see check_constraints.
SlotOutcome compute_slot_rates(const CellState& state, const JointAction& action,
                               const NetworkConfig& config);

// QoS tests shared by the constraint check and the statistics code.
bool gb_meets_target(double rate, const NetworkConfig& config);
bool gf_meets_target(double rate, const NetworkConfig& config);

ConstraintReport check_constraints(const SlotOutcome& outcome,
                                   const JointAction& action,
                                   const NetworkConfig& config);

// Largest aggregate GF received power each GB user tolerates while keeping
// its QoS rate at tau. Channels without a GB user have no bound (+inf).
std::vector<double> interference_thresholds(const CellState& state,
                                            const NetworkConfig& config);

struct StepResult {
  std::vector<double> next_state;  // every GF user's rate this slot
  double reward = 0.0;
  SlotOutcome outcome;
};

// Pure evaluation of one slot against the fading already in `state`.
StepResult evaluate_step(const CellState& state, const JointAction& action,
                         double previous_capacity, const NetworkConfig& config);

// Stateful wrapper used by the trainer: holds the topology, the current
// fading draw, the observation and the previous slot's capacity.
class Environment {
 public:
  Environment(NetworkConfig config, CellState topology);

  // Fresh fading from `fading_seed`, zero observation, previous capacity 0.
  void reset(std::uint64_t fading_seed);
  StepResult step(const JointAction& action);

  const NetworkConfig& config() const { return config_; }
  const CellState& state() const { return state_; }
  const std::vector<double>& observation() const { return observation_; }
  double previous_capacity() const { return previous_capacity_; }

 private:
  NetworkConfig config_;
  CellState state_;
  Rng fading_rng_;
  std::vector<double> observation_;
  double previous_capacity_ = 0.0;
};

}  // namespace sgf
