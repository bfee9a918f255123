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

#include "sgfnoma/agents.hpp"

#include <algorithm>
#include <cmath>

#include "sgfnoma/errors.hpp"

namespace sgf {

void ReplayBuffer::push(Transition t) {
  if (capacity_ == 0) return;
  if (storage_.size() < capacity_) {
    storage_.push_back(std::move(t));
  } else {
    storage_[cursor_] = std::move(t);
  }
  cursor_ = (cursor_ + 1) % capacity_;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t count,
                                                      Rng& rng) const {
  const std::size_t n = storage_.size();
  if (count > n) throw DimensionError("replay buffer holds fewer transitions than requested");
  std::vector<std::size_t> picked;
  picked.reserve(count);
  for (std::size_t j = n - count; j < n; ++j) {
    const std::size_t t = rng.index(j + 1);
    if (std::find(picked.begin(), picked.end(), t) == picked.end())
      picked.push_back(t);
    else
      picked.push_back(j);
  }
  return picked;
}

void ReplayBuffer::restore(std::vector<Transition> storage, std::size_t cursor) {
  if (storage.size() > capacity_ || (capacity_ > 0 && cursor >= capacity_))
    throw DimensionError("replay buffer restore: inconsistent ring");
  storage_ = std::move(storage);
  storage_.reserve(capacity_);
  cursor_ = cursor;
}

double EpsilonSchedule::value(long long step) const {
  if (step >= decay_steps) return end;
  if (step <= 0) return start;
  const double frac = static_cast<double>(step) / static_cast<double>(decay_steps);
  return std::max(end, start - (start - end) * frac);
}

EpsilonSchedule make_epsilon_schedule(const ExperimentConfig& config) {
  const auto horizon = static_cast<long long>(
      std::llround(config.epsilon_decay_fraction *
                   static_cast<double>(config.total_steps())));
  return {config.epsilon_start, config.epsilon_end, std::max(1LL, horizon)};
}

nn::NetworkShape make_network_shape(const ExperimentConfig& config, int inputs) {
  nn::NetworkShape shape;
  // A cell with no GF users still needs a well-formed network.
  shape.inputs = std::max(1, inputs);
  shape.hidden = config.hidden_layers;
  shape.actions = config.network.num_actions();
  shape.head = config.algorithm == Algorithm::dueling_ddqn ? nn::HeadKind::dueling
                                                           : nn::HeadKind::plain;
  shape.stream_hidden = config.stream_hidden;
  return shape;
}

std::vector<bool> build_action_mask(const NetworkConfig& config) {
  std::vector<bool> mask(static_cast<std::size_t>(config.num_actions()), true);
  const double cap = config.max_user_power * (1.0 + 1e-12);
  const int levels = config.num_power_levels();
  bool any = config.allow_idle;
  for (int a = 0; a < config.num_transmit_actions(); ++a) {
    const bool ok = config.power_levels[static_cast<std::size_t>(a % levels)] <= cap;
    mask[static_cast<std::size_t>(a)] = ok;
    any = any || ok;
  }
  if (!any)
    throw ConfigError("max_user_power: every power level exceeds the cap");
  return mask;
}

int masked_argmax(std::span<const Real> q, const std::vector<bool>& mask) {
  if (q.size() != mask.size()) throw DimensionError("masked_argmax: size mismatch");
  int best = -1;
  for (std::size_t a = 0; a < q.size(); ++a) {
    if (!mask[a]) continue;
    if (best < 0 || q[a] > q[static_cast<std::size_t>(best)]) best = static_cast<int>(a);
  }
  if (best < 0) throw ConfigError("action mask admits no action");
  return best;
}

Agent make_agent(int id, const ExperimentConfig& config, int inputs,
                 std::uint64_t master_seed) {
  const auto uid = static_cast<std::uint64_t>(id);
  Agent agent;
  agent.id = id;
  Rng init(derive_seed(master_seed, Stream::weight_init, {uid}));
  agent.primary = QNet::he_uniform(make_network_shape(config, inputs), init);
  agent.target = agent.primary;
  agent.optimizer = nn::AdamState<Real>(agent.primary, config.learning_rate,
                                        config.adam_beta1, config.adam_beta2,
                                        config.adam_epsilon);
  agent.buffer = ReplayBuffer(static_cast<std::size_t>(config.replay_capacity));
  agent.mask = build_action_mask(config.network);
  agent.explore_rng = Rng(derive_seed(master_seed, Stream::exploration, {uid}));
  agent.replay_rng = Rng(derive_seed(master_seed, Stream::replay, {uid}));
  return agent;
}

int select_action(const QNet& net, const std::vector<bool>& mask,
                  std::span<const Real> state, double epsilon, Rng& rng) {
  const double u = rng.uniform01();
  if (u < epsilon) {
    const auto valid = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
    if (valid == 0) throw ConfigError("action mask admits no action");
    std::size_t k = rng.index(valid);
    for (std::size_t a = 0; a < mask.size(); ++a)
      if (mask[a] && k-- == 0) return static_cast<int>(a);
  }
  nn::Vector<Real> x = Eigen::Map<const nn::Vector<Real>>(
      state.data(), static_cast<Eigen::Index>(state.size()));
  if (x.size() == 0) x = nn::Vector<Real>::Zero(net.shape().inputs);
  const nn::Vector<Real> q = net.forward(x);
  return masked_argmax(std::span<const Real>(q.data(), static_cast<std::size_t>(q.size())),
                       mask);
}

int select_action(const Agent& agent, std::span<const Real> state, double epsilon,
                  Rng& rng) {
  return select_action(agent.primary, agent.mask, state, epsilon, rng);
}

namespace {

void stack(std::span<const Transition* const> batch, bool next, int inputs,
           nn::Matrix<Real>& m) {
  m.setZero(inputs, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& v = next ? batch[i]->next_state : batch[i]->state;
    if (v.empty()) continue;
    if (static_cast<int>(v.size()) != inputs)
      throw DimensionError("transition state has wrong dimension");
    m.col(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const nn::Vector<Real>>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
}

void fill_targets(std::span<const Transition* const> batch, const QNet& primary,
                  const QNet& target, double discount, const std::vector<bool>& mask,
                  AgentWorkspace& ws) {
  if (batch.empty()) throw DimensionError("ddqn_target: empty batch");
  stack(batch, true, primary.shape().inputs, ws.next_states);
  const nn::Matrix<Real>& q_select = primary.forward_batch(ws.next_states, ws.select);
  const nn::Matrix<Real>& q_eval = target.forward_batch(ws.next_states, ws.evaluate);
  ws.targets.resize(batch.size());
  const auto beta = static_cast<Real>(discount);
  const auto rows = static_cast<std::size_t>(q_select.rows());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    const int best = masked_argmax(std::span<const Real>(&q_select(0, col), rows), mask);
    ws.targets[i] = batch[i]->reward + beta * q_eval(best, col);
  }
}

}  // namespace

std::vector<Real> ddqn_target(std::span<const Transition* const> batch,
                              const QNet& primary, const QNet& target,
                              double discount, const std::vector<bool>& mask) {
  AgentWorkspace ws;
  fill_targets(batch, primary, target, discount, mask, ws);
  return ws.targets;
}

TrainStats train_step(Agent& agent, std::span<const Transition* const> batch,
                      double discount, double grad_clip) {
  AgentWorkspace& ws = agent.scratch;
  fill_targets(batch, agent.primary, agent.target, discount, agent.mask, ws);
  stack(batch, false, agent.primary.shape().inputs, ws.states);
  ws.actions.resize(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) ws.actions[i] = batch[i]->action;
  const nn::LossGradient<Real>& lg = nn::td_loss_gradient<Real>(
      agent.primary, ws.states, ws.actions, ws.targets, ws.loss);
  if (!std::isfinite(lg.loss))
    throw TrainingError("agent " + std::to_string(agent.id) + ": non-finite loss after " +
                        std::to_string(agent.train_steps) + " updates");
  nn::adam_step(agent.primary, lg.grads, agent.optimizer, grad_clip);
  ++agent.train_steps;
  return {lg.loss};
}

bool sync_target(Agent& agent, long long step_counter, int period) {
  if (period <= 0 || step_counter <= 0 || step_counter % period != 0) return false;
  agent.target = agent.primary;
  return true;
}

}  // namespace sgf
