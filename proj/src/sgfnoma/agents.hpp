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

#include <cstddef>
#include <span>
#include <vector>

#include "sgfnoma/config.hpp"
#include "sgfnoma/nn.hpp"
#include "sgfnoma/rng.hpp"

namespace sgf {

// Agents train in single precision; the network code is also instantiated in
// double for gradient checks.
using Real = float;
using QNet = nn::QNetwork<Real>;

struct Transition {
  std::vector<Real> state;
  int action = 0;
  Real reward = 0;
  std::vector<Real> next_state;
};

// Fixed-capacity ring of transitions; the oldest entry is overwritten once
// the ring is full.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity = 0) : capacity_(capacity) {
    storage_.reserve(capacity);
  }

  void push(Transition t);
  std::size_t size() const { return storage_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::size_t cursor() const { return cursor_; }
  // Storage slot i (not insertion order once wrapped).
  const Transition& at(std::size_t i) const { return storage_.at(i); }

  // `count` distinct slots drawn uniformly (Floyd's algorithm).
  std::vector<std::size_t> sample_indices(std::size_t count, Rng& rng) const;

  // Restores a ring from its storage order and cursor.
  void restore(std::vector<Transition> storage, std::size_t cursor);

 private:
  std::size_t capacity_;
  std::vector<Transition> storage_;
  std::size_t cursor_ = 0;
};

// Linear decay from start to end over decay_steps, flat afterwards.
struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.01;
  long long decay_steps = 1;

  double value(long long step) const;
};

EpsilonSchedule make_epsilon_schedule(const ExperimentConfig& config);

nn::NetworkShape make_network_shape(const ExperimentConfig& config, int inputs);

// Action (m, p) is invalid when level p exceeds the per-user cap.
// Throws ConfigError when nothing is left.
std::vector<bool> build_action_mask(const NetworkConfig& config);

// Lowest-index maximiser among valid actions.
int masked_argmax(std::span<const Real> q, const std::vector<bool>& mask);

// Buffers reused by train_step; contents are meaningless between calls.
struct AgentWorkspace {
  QNet::Cache select;
  QNet::Cache evaluate;
  nn::LossWorkspace<Real> loss;
  nn::Matrix<Real> states;
  nn::Matrix<Real> next_states;
  std::vector<Real> targets;
  std::vector<int> actions;
};

struct Agent {
  int id = 0;
  QNet primary;
  QNet target;
  nn::AdamState<Real> optimizer;
  ReplayBuffer buffer;
  std::vector<bool> mask;
  Rng explore_rng;
  Rng replay_rng;
  long long train_steps = 0;
  AgentWorkspace scratch;
};

// Primary and target start from identical weights.
Agent make_agent(int id, const ExperimentConfig& config, int inputs,
                 std::uint64_t master_seed);

// Epsilon-greedy over the valid actions. Always consumes one uniform draw so
// the exploration stream does not depend on epsilon.
int select_action(const QNet& net, const std::vector<bool>& mask,
                  std::span<const Real> state, double epsilon, Rng& rng);
int select_action(const Agent& agent, std::span<const Real> state,
                  double epsilon, Rng& rng);

// Double-Q targets: the primary network picks argmax over valid actions at
// the next state, the target network scores it. No terminal cutoff.
std::vector<Real> ddqn_target(std::span<const Transition* const> batch,
                              const QNet& primary, const QNet& target,
                              double discount, const std::vector<bool>& mask);

struct TrainStats {
  Real loss = 0;  // batch mean of (y - Q(s, a))^2 before the update
};

TrainStats train_step(Agent& agent, std::span<const Transition* const> batch,
                      double discount, double grad_clip = 0.0);

// Copies primary into target when step_counter is a positive multiple of
// period. Returns whether a copy happened.
bool sync_target(Agent& agent, long long step_counter, int period);

}  // namespace sgf
