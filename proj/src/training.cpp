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

#include "sgfnoma/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "sgfnoma/errors.hpp"

namespace sgf {

std::array<bool, kNumConstraints> constraint_flags(const ConstraintReport& r) {
  return {r.decode_order, r.power_limit, r.single_channel, r.min_cluster,
          r.gb_qos,       r.gf_qos,      r.max_gf};
}

std::vector<double> moving_average(const std::vector<double>& values, int window) {
  std::vector<double> out(values.size());
  const std::size_t w = static_cast<std::size_t>(std::max(1, window));
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    if (i >= w) sum -= values[i - w];
    out[i] = sum / static_cast<double>(std::min(i + 1, w));
  }
  return out;
}

int plateau_episode(const std::vector<double>& values, int window, double fraction) {
  if (values.empty()) return 0;
  const std::vector<double> ma = moving_average(values, window);
  const double goal = fraction * ma.back();
  if (!(ma.back() > 0.0)) return 0;
  for (std::size_t i = 0; i < ma.size(); ++i)
    if (ma[i] >= goal) return static_cast<int>(i);
  return static_cast<int>(ma.size()) - 1;
}

std::vector<Real> agent_observation(const std::vector<double>& rates, int agent,
                                    bool permute) {
  const std::size_t n = rates.size();
  std::vector<Real> obs(n);
  const std::size_t shift = permute && n > 0 ? static_cast<std::size_t>(agent) % n : 0;
  for (std::size_t i = 0; i < n; ++i) obs[i] = static_cast<Real>(rates[(i + shift) % n]);
  return obs;
}

namespace {

CellState training_topology(const ExperimentConfig& config) {
  config.validate();
  return sample_topology(config.network, derive_seed(config.seed, Stream::topology));
}

}  // namespace

Trainer::Trainer(ExperimentConfig config)
    : Trainer(config, training_topology(config)) {}

Trainer::Trainer(ExperimentConfig config, CellState topology)
    : config_(std::move(config)), topology_(std::move(topology)) {
  config_.validate();
  const int n = topology_.num_gf();
  agents_.reserve(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) agents_.push_back(make_agent(j, config_, n, config_.seed));
  schedule_ = make_epsilon_schedule(config_);
}

std::vector<double> Trainer::episode_rewards() const {
  std::vector<double> r;
  r.reserve(history_.size());
  for (const EpisodeSummary& e : history_) r.push_back(e.mean_reward);
  return r;
}

void Trainer::restore_progress(long long global_step,
                               std::vector<EpisodeSummary> history) {
  global_step_ = global_step;
  history_ = std::move(history);
}

EpisodeSummary Trainer::run_episode(const StepObserver& observer) {
  const int episode = episodes_completed();
  const NetworkConfig& net = config_.network;
  const int n = static_cast<int>(agents_.size());
  const auto batch = static_cast<std::size_t>(config_.batch_size);

  Environment env(net, topology_);
  env.reset(derive_seed(config_.seed, Stream::fading, {static_cast<std::uint64_t>(episode)}));

  EpisodeSummary summary;
  summary.episode = episode;
  double loss_sum = 0.0;
  long long loss_count = 0;
  std::vector<std::vector<Real>> obs(static_cast<std::size_t>(n));
  std::vector<const Transition*> picked(batch);

  for (int t = 0; t < config_.steps_per_episode; ++t) {
    const double eps = schedule_.value(global_step_);
    StepRecord rec;
    rec.episode = episode;
    rec.step = t;
    rec.epsilon = eps;
    rec.actions.resize(static_cast<std::size_t>(n));
    rec.losses.assign(static_cast<std::size_t>(n), std::numeric_limits<double>::quiet_NaN());

    JointAction joint(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      Agent& agent = agents_[static_cast<std::size_t>(j)];
      auto& o = obs[static_cast<std::size_t>(j)];
      o = agent_observation(env.observation(), j, config_.permute_observation);
      const int a = select_action(agent, o, eps, agent.explore_rng);
      if (!agent.mask[static_cast<std::size_t>(a)])
        throw TrainingError("agent " + std::to_string(j) + " selected masked action " +
                            std::to_string(a));
      rec.actions[static_cast<std::size_t>(j)] = a;
      joint[static_cast<std::size_t>(j)] = decode_action(net, a);
    }

    StepResult res = env.step(joint);
    if (res.reward > 0.0 && !res.outcome.report.all())
      throw TrainingError("reward paid on a slot that violates a constraint");
    if (res.reward != 0.0 && res.reward != res.outcome.capacity)
      throw TrainingError("reward differs from the slot capacity");
    if (!std::isfinite(res.reward))
      throw TrainingError("non-finite reward at episode " + std::to_string(episode));

    for (int j = 0; j < n; ++j) {
      Agent& agent = agents_[static_cast<std::size_t>(j)];
      Transition tr;
      tr.state = std::move(obs[static_cast<std::size_t>(j)]);
      tr.action = rec.actions[static_cast<std::size_t>(j)];
      tr.reward = static_cast<Real>(res.reward);
      tr.next_state = agent_observation(res.next_state, j, config_.permute_observation);
      agent.buffer.push(std::move(tr));
      if (agent.buffer.size() >= batch) {
        const auto idx = agent.buffer.sample_indices(batch, agent.replay_rng);
        for (std::size_t b = 0; b < batch; ++b) picked[b] = &agent.buffer.at(idx[b]);
        const TrainStats st = train_step(agent, picked, config_.discount, config_.grad_clip);
        rec.losses[static_cast<std::size_t>(j)] = st.loss;
        loss_sum += st.loss;
        ++loss_count;
      }
    }

    ++global_step_;
    for (Agent& agent : agents_) sync_target(agent, global_step_, config_.target_sync_period);

    summary.mean_reward += res.reward;
    summary.mean_capacity += res.outcome.capacity;
    summary.mean_throughput += res.outcome.decoded_throughput;
    const auto flags = constraint_flags(res.outcome.report);
    for (int k = 0; k < kNumConstraints; ++k)
      if (!flags[static_cast<std::size_t>(k)]) ++summary.violations[static_cast<std::size_t>(k)];
    if (res.outcome.report.all()) summary.constraint_rate += 1.0;
    summary.final_epsilon = eps;

    if (observer) {
      rec.reward = res.reward;
      rec.capacity = res.outcome.capacity;
      rec.decoded_throughput = res.outcome.decoded_throughput;
      rec.report = res.outcome.report;
      rec.gf_rates = res.outcome.gf_rates;
      rec.gb_rates = res.outcome.gb_rates;
      observer(rec);
    }
  }

  const double steps = static_cast<double>(config_.steps_per_episode);
  summary.mean_reward /= steps;
  summary.mean_capacity /= steps;
  summary.mean_throughput /= steps;
  summary.constraint_rate /= steps;
  summary.mean_loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
  history_.push_back(summary);
  return summary;
}

void Trainer::run(int count, const StepObserver& observer) {
  int remaining = config_.episodes - episodes_completed();
  if (count >= 0) remaining = std::min(remaining, count);
  for (int e = 0; e < remaining; ++e) run_episode(observer);
}

std::vector<EvalSlot> run_policy(const NetworkConfig& config, const CellState& topology,
                                 const Policy& policy, const EvalSchedule& schedule) {
  std::vector<EvalSlot> slots;
  slots.reserve(static_cast<std::size_t>(schedule.episodes) *
                static_cast<std::size_t>(std::max(0, schedule.steps)));
  for (int e = 0; e < schedule.episodes; ++e) {
    const auto ue = static_cast<std::uint64_t>(e);
    CellState cell = topology;
    if (schedule.fresh_users >= 0) {
      Rng placement(derive_seed(schedule.seed, Stream::open_loop, {ue}));
      cell.gf_distances.resize(static_cast<std::size_t>(schedule.fresh_users));
      for (double& d : cell.gf_distances)
        d = distance_from_quantile(placement.uniform_open0(), config.cell_radius);
      cell.gf_fading.assign(cell.gf_distances.size(), 1.0);
    }
    if (schedule.remove_gb)
      for (GbUser& gb : cell.gb_users) gb.subchannel = -1;

    Environment env(config, cell);
    env.reset(derive_seed(schedule.seed, Stream::eval_fading, {ue}));
    Rng chooser(derive_seed(schedule.seed, Stream::baseline, {ue}));
    for (int t = 0; t < schedule.steps; ++t) {
      const JointAction joint = policy(env.observation(), env.state(), chooser);
      const StepResult res = env.step(joint);
      EvalSlot slot;
      slot.episode = e;
      slot.step = t;
      slot.actions.reserve(joint.size());
      for (const auto& c : joint) slot.actions.push_back(c ? encode_action(config, c) : -1);
      slot.reward = res.reward;
      slot.capacity = res.outcome.capacity;
      slot.decoded_throughput = res.outcome.decoded_throughput;
      slot.report = res.outcome.report;
      slot.gf_rates = res.outcome.gf_rates;
      slot.gb_rates = res.outcome.gb_rates;
      slot.gb_active = res.outcome.gb_active;
      for (std::size_t i = 0; i < slot.gb_rates.size(); ++i)
        if (slot.gb_active[i] && !gb_meets_target(slot.gb_rates[i], config))
          ++slot.gb_violations;
      slots.push_back(std::move(slot));
    }
  }
  return slots;
}

Policy agent_policy(const std::vector<Agent>& agents, const NetworkConfig& config,
                    bool permute, double epsilon) {
  return [&agents, config, permute, epsilon](const std::vector<double>& observation,
                                             const CellState& cell, Rng& rng) {
    if (static_cast<std::size_t>(cell.num_gf()) != agents.size())
      throw DimensionError("agent policy: cell has " + std::to_string(cell.num_gf()) +
                           " GF users for " + std::to_string(agents.size()) + " agents");
    JointAction joint(agents.size());
    for (std::size_t j = 0; j < agents.size(); ++j) {
      const auto o = agent_observation(observation, static_cast<int>(j), permute);
      joint[j] = decode_action(config, select_action(agents[j], o, epsilon, rng));
    }
    return joint;
  };
}

std::vector<EvalSlot> run_greedy_evaluation(const Trainer& trainer, int episodes,
                                            double epsilon) {
  const ExperimentConfig& cfg = trainer.config();
  EvalSchedule schedule;
  schedule.episodes = episodes;
  schedule.steps = cfg.steps_per_episode;
  schedule.seed = cfg.seed;
  return run_policy(cfg.network, trainer.topology(),
                    agent_policy(trainer.agents(), cfg.network, cfg.permute_observation,
                                 epsilon),
                    schedule);
}

ThroughputStats summarize(const std::vector<EvalSlot>& slots) {
  ThroughputStats s;
  s.slots = static_cast<long long>(slots.size());
  if (slots.empty()) return s;
  long long gb_slots = 0, gb_bad = 0, gf_slots = 0;
  double gf_sum = 0.0;
  for (const EvalSlot& slot : slots) {
    s.mean_capacity += slot.capacity;
    s.mean_throughput += slot.decoded_throughput;
    s.mean_reward += slot.reward;
    if (slot.report.all()) s.constraint_rate += 1.0;
    for (bool active : slot.gb_active) gb_slots += active ? 1 : 0;
    gb_bad += slot.gb_violations;
    for (std::size_t j = 0; j < slot.actions.size(); ++j) {
      if (slot.actions[j] < 0) continue;
      ++gf_slots;
      gf_sum += slot.gf_rates[j];
    }
  }
  const double n = static_cast<double>(slots.size());
  s.mean_capacity /= n;
  s.mean_throughput /= n;
  s.mean_reward /= n;
  s.constraint_rate /= n;
  s.mean_gf_rate = gf_slots > 0 ? gf_sum / static_cast<double>(gf_slots) : 0.0;
  s.gb_violation_rate = gb_slots > 0 ? static_cast<double>(gb_bad) / static_cast<double>(gb_slots) : 0.0;
  return s;
}

RunSummary summarize_run(const Trainer& trainer) {
  RunSummary r;
  r.seed = trainer.config().seed;
  r.episode_rewards = trainer.episode_rewards();
  r.moving_average = moving_average(r.episode_rewards, trainer.config().moving_average_window);
  r.final_average = r.moving_average.empty() ? 0.0 : r.moving_average.back();
  r.plateau = plateau_episode(r.episode_rewards, trainer.config().moving_average_window);
  return r;
}

RunSummary train_and_evaluate(const ExperimentConfig& config, const StepObserver& observer) {
  const auto start = std::chrono::steady_clock::now();
  Trainer trainer(config);
  trainer.run(-1, observer);
  RunSummary r = summarize_run(trainer);
  r.eval = summarize(run_greedy_evaluation(trainer, config.eval_episodes));
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

ExperimentConfig with_level_count(const ExperimentConfig& base, int count) {
  ExperimentConfig c = base;
  const auto [lo, hi] = std::minmax_element(base.network.power_levels.begin(),
                                            base.network.power_levels.end());
  c.network.power_levels = evenly_spaced_levels(*lo, *hi, count);
  return c;
}

ExperimentConfig with_cluster_size(const ExperimentConfig& base, int k) {
  ExperimentConfig c = base;
  c.network.num_gf = k * base.network.num_subchannels;
  c.network.max_gf_per_channel = k;
  return c;
}

ExperimentConfig with_agent_count(const ExperimentConfig& base, int n) {
  ExperimentConfig c = base;
  c.network.num_gf = n;
  const int m = base.network.num_subchannels;
  c.network.max_gf_per_channel = std::max(base.network.max_gf_per_channel, (n + m - 1) / m);
  return c;
}

namespace {

std::vector<SweepRow> sweep(const ExperimentConfig& base, const std::string& axis,
                            const std::vector<int>& values,
                            ExperimentConfig (*adapt)(const ExperimentConfig&, int),
                            const SweepProgress& progress) {
  std::vector<SweepRow> rows;
  for (int v : values) {
    for (std::uint64_t seed : base.seeds) {
      ExperimentConfig c = adapt(base, v);
      c.seed = seed;
      SweepRow row{axis, v, train_and_evaluate(c)};
      if (progress) progress(row);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace

std::vector<SweepRow> sweep_power_levels(const ExperimentConfig& config,
                                         const SweepProgress& progress) {
  return sweep(config, "levels", config.sweep_level_counts, &with_level_count, progress);
}

std::vector<SweepRow> sweep_cluster_size(const ExperimentConfig& config,
                                         const SweepProgress& progress) {
  return sweep(config, "gf_per_channel", config.sweep_cluster_sizes, &with_cluster_size,
               progress);
}

std::vector<SweepRow> sweep_agent_count(const ExperimentConfig& config,
                                        const SweepProgress& progress) {
  return sweep(config, "agents", config.sweep_agent_counts, &with_agent_count, progress);
}

}  // namespace sgf
