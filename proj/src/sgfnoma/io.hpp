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

#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "sgfnoma/config.hpp"
#include "sgfnoma/power_pool.hpp"
#include "sgfnoma/training.hpp"

namespace sgf {

inline constexpr const char* kVersion = "1.0.0";

// ---- configuration -------------------------------------------------------
//
// A config document is a flat JSON object whose keys are the field names of
// NetworkConfig / ExperimentConfig (see config_keys()). Two extra keys are
// accepted as input only:
//   num_power_levels   N levels spread evenly over the current level range
//   noise_power_dbm    noise power in dBm (overrides noise_power)
// Unknown keys and ill-typed values raise ConfigError naming the key.

using Override = std::pair<std::string, std::string>;

std::vector<std::string> config_keys();

ExperimentConfig parse_config_text(const std::string& json_text,
                                   ExperimentConfig base = {});
// `path` may be empty (defaults only). Overrides are applied after the file,
// in order; each value is read as JSON, falling back to a bare string.
ExperimentConfig load_config(const std::string& path,
                             const std::vector<Override>& overrides = {});
void apply_override(ExperimentConfig& config, const std::string& key,
                    const std::string& value);

std::string config_to_json_text(const ExperimentConfig& config, int indent = 2);

// ---- delimited text ------------------------------------------------------

// Shortest round-trip decimal form; NaN becomes an empty field.
std::string format_number(double value);

// Per-step metrics. Columns:
//   episode,step,reward,capacity,throughput,<7 constraint flags>,epsilon,
//   loss_0..loss_{N-1}
// Flags are 1 when the constraint held. A loss cell is empty when that agent
// did not update at that step (buffer still filling).
class MetricsWriter {
 public:
  MetricsWriter(const std::string& path, int num_agents);
  void write(const StepRecord& record);
  static std::string header(int num_agents);

 private:
  std::ofstream out_;
  int num_agents_;
};

// episode,mean_reward,moving_average,mean_capacity,mean_throughput,
// constraint_rate,<7 violation counts>,mean_loss,epsilon
void write_episode_summaries(const std::string& path,
                             const std::vector<EpisodeSummary>& history, int window);

// episode,step,reward,capacity,throughput,<7 flags>,action_0..action_{N-1}
void write_eval_slots(const std::string& path, const std::vector<EvalSlot>& slots);

// axis,value,seed,final_moving_average,plateau_episode,eval_capacity,
// eval_throughput,eval_reward,eval_constraint_rate,eval_gb_violation_rate
void write_sweep(const std::string& path, const std::vector<SweepRow>& rows);

// protocol,seed,slots,mean_capacity,mean_throughput,mean_reward,
// constraint_rate,gb_violation_rate,mean_gf_rate
void write_comparison(const std::string& path, const std::vector<ProtocolResult>& rows,
                      bool append = false);

// ---- pools ---------------------------------------------------------------

std::string pools_to_json_text(const PowerPoolSet& pools, const NetworkConfig& config);
PowerPoolSet pools_from_json_text(const std::string& text);
std::string pools_table(const PowerPoolSet& pools);

// ---- checkpoints ---------------------------------------------------------
//
// CBOR document holding the resolved config, topology, progress counters,
// episode history and, per agent, both networks, Adam moments, generator
// states and (optionally) the replay ring. Tensors are stored as
// little-endian binary blobs.

void save_checkpoint(const Trainer& trainer, const std::string& path,
                     bool include_buffers = true);
// With `expected`, the stored architecture (agents, inputs, actions, head,
// hidden sizes) must match it or DimensionError is thrown.
Trainer load_checkpoint(const std::string& path, const ExperimentConfig* expected = nullptr);

// ---- manifest ------------------------------------------------------------

struct RunManifest {
  std::string command;
  ExperimentConfig config;
  std::vector<std::string> outputs;  // paths relative to the manifest
  double seconds = 0.0;
};

void write_manifest(const std::string& path, const RunManifest& manifest);

// Whole-file helpers.
std::string read_text(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace sgf
