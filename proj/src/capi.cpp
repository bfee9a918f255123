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

#include "sgfnoma/sgfnoma.h"

#include <cstring>
#include <memory>
#include <new>
#include <optional>
#include <string>

#include "sgfnoma/errors.hpp"
#include "sgfnoma/io.hpp"
#include "sgfnoma/power_pool.hpp"
#include "sgfnoma/training.hpp"

struct sgf_config {
  sgf::ExperimentConfig value;
};

struct sgf_trainer {
  explicit sgf_trainer(sgf::Trainer t) : trainer(std::move(t)) {}
  sgf::Trainer trainer;
  std::unique_ptr<sgf::MetricsWriter> metrics;
};

struct sgf_pools {
  sgf::PowerPoolSet value;
};

namespace {

thread_local std::string g_last_error;

sgf_status fail(sgf_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <class F>
sgf_status guarded(F&& body) {
  try {
    body();
    return SGF_OK;
  } catch (const sgf::ConfigError& e) {
    return fail(SGF_ERR_CONFIG, e.what());
  } catch (const sgf::DimensionError& e) {
    return fail(SGF_ERR_DIMENSION, e.what());
  } catch (const sgf::TrainingError& e) {
    return fail(SGF_ERR_TRAINING, e.what());
  } catch (const sgf::IoError& e) {
    return fail(SGF_ERR_IO, e.what());
  } catch (const sgf::FormatError& e) {
    return fail(SGF_ERR_FORMAT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SGF_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(SGF_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(SGF_ERR_INTERNAL, "unknown error");
  }
}

#define SGF_REQUIRE(cond, what) \
  if (!(cond)) return fail(SGF_ERR_ARGUMENT, what)

sgf_stats to_c(const sgf::ThroughputStats& s) {
  return {s.slots,           s.mean_capacity,     s.mean_throughput, s.mean_reward,
          s.constraint_rate, s.gb_violation_rate, s.mean_gf_rate};
}

}  // namespace

extern "C" {

const char* sgf_version(void) { return sgf::kVersion; }

const char* sgf_last_error(void) { return g_last_error.c_str(); }

const char* sgf_status_name(sgf_status status) {
  switch (status) {
    case SGF_OK: return "ok";
    case SGF_ERR_ARGUMENT: return "invalid argument";
    case SGF_ERR_CONFIG: return "configuration error";
    case SGF_ERR_DIMENSION: return "dimension mismatch";
    case SGF_ERR_TRAINING: return "training failure";
    case SGF_ERR_IO: return "i/o error";
    case SGF_ERR_FORMAT: return "format error";
    case SGF_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

sgf_status sgf_config_new(sgf_config** out) {
  SGF_REQUIRE(out, "out is null");
  return guarded([&] { *out = new sgf_config{}; });
}

sgf_status sgf_config_load(const char* path, sgf_config** out) {
  SGF_REQUIRE(out, "out is null");
  return guarded([&] {
    auto cfg = std::make_unique<sgf_config>();
    cfg->value = sgf::load_config(path ? path : "");
    *out = cfg.release();
  });
}

sgf_status sgf_config_set(sgf_config* config, const char* key, const char* value) {
  SGF_REQUIRE(config && key && value, "null argument");
  return guarded([&] { sgf::apply_override(config->value, key, value); });
}

sgf_status sgf_config_validate(const sgf_config* config) {
  SGF_REQUIRE(config, "config is null");
  return guarded([&] { config->value.validate(); });
}

sgf_status sgf_config_to_json(const sgf_config* config, char* buffer, size_t capacity,
                              size_t* required) {
  SGF_REQUIRE(config, "config is null");
  return guarded([&] {
    const std::string text = sgf::config_to_json_text(config->value);
    if (required) *required = text.size() + 1;
    if (buffer && capacity > 0) {
      const std::size_t n = std::min(capacity - 1, text.size());
      std::memcpy(buffer, text.data(), n);
      buffer[n] = '\0';
    }
  });
}

sgf_status sgf_config_clone(const sgf_config* config, sgf_config** out) {
  SGF_REQUIRE(config && out, "null argument");
  return guarded([&] { *out = new sgf_config{config->value}; });
}

void sgf_config_free(sgf_config* config) { delete config; }

sgf_status sgf_trainer_new(const sgf_config* config, sgf_trainer** out) {
  SGF_REQUIRE(config && out, "null argument");
  return guarded([&] { *out = new sgf_trainer(sgf::Trainer(config->value)); });
}

sgf_status sgf_trainer_load(const char* path, const sgf_config* expected, sgf_trainer** out) {
  SGF_REQUIRE(path && out, "null argument");
  return guarded([&] {
    *out = new sgf_trainer(
        sgf::load_checkpoint(path, expected ? &expected->value : nullptr));
  });
}

sgf_status sgf_trainer_save(const sgf_trainer* trainer, const char* path, int include_buffers) {
  SGF_REQUIRE(trainer && path, "null argument");
  return guarded([&] { sgf::save_checkpoint(trainer->trainer, path, include_buffers != 0); });
}

sgf_status sgf_trainer_open_metrics(sgf_trainer* trainer, const char* csv_path) {
  SGF_REQUIRE(trainer && csv_path, "null argument");
  return guarded([&] {
    trainer->metrics = std::make_unique<sgf::MetricsWriter>(
        csv_path, static_cast<int>(trainer->trainer.agents().size()));
  });
}

sgf_status sgf_trainer_run(sgf_trainer* trainer, int episodes) {
  SGF_REQUIRE(trainer, "trainer is null");
  return guarded([&] {
    sgf::StepObserver observer;
    if (trainer->metrics)
      observer = [w = trainer->metrics.get()](const sgf::StepRecord& r) { w->write(r); };
    trainer->trainer.run(episodes, observer);
  });
}

sgf_status sgf_trainer_progress(const sgf_trainer* trainer, int* episodes_done,
                                long long* global_step) {
  SGF_REQUIRE(trainer, "trainer is null");
  if (episodes_done) *episodes_done = trainer->trainer.episodes_completed();
  if (global_step) *global_step = trainer->trainer.global_step();
  return SGF_OK;
}

sgf_status sgf_trainer_episode_rewards(const sgf_trainer* trainer, double* out,
                                       size_t capacity, size_t* count) {
  SGF_REQUIRE(trainer, "trainer is null");
  const std::vector<double> r = trainer->trainer.episode_rewards();
  if (count) *count = r.size();
  if (out)
    for (std::size_t i = 0; i < r.size() && i < capacity; ++i) out[i] = r[i];
  return SGF_OK;
}

sgf_status sgf_trainer_write_summary(const sgf_trainer* trainer, const char* csv_path) {
  SGF_REQUIRE(trainer && csv_path, "null argument");
  return guarded([&] {
    sgf::write_episode_summaries(csv_path, trainer->trainer.history(),
                                 trainer->trainer.config().moving_average_window);
  });
}

sgf_status sgf_trainer_evaluate(const sgf_trainer* trainer, int episodes, const char* slots_csv,
                                sgf_stats* out) {
  SGF_REQUIRE(trainer, "trainer is null");
  return guarded([&] {
    const int n = episodes > 0 ? episodes : trainer->trainer.config().eval_episodes;
    const auto slots = sgf::run_greedy_evaluation(trainer->trainer, n);
    if (slots_csv) sgf::write_eval_slots(slots_csv, slots);
    if (out) *out = to_c(sgf::summarize(slots));
  });
}

sgf_status sgf_trainer_config(const sgf_trainer* trainer, sgf_config** out) {
  SGF_REQUIRE(trainer && out, "null argument");
  return guarded([&] { *out = new sgf_config{trainer->trainer.config()}; });
}

void sgf_trainer_free(sgf_trainer* trainer) { delete trainer; }

sgf_status sgf_pools_extract(const sgf_trainer* trainer, sgf_pools** out) {
  SGF_REQUIRE(trainer && out, "null argument");
  return guarded([&] { *out = new sgf_pools{sgf::extract_trainer_pools(trainer->trainer)}; });
}

sgf_status sgf_pools_save(const sgf_pools* pools, const sgf_config* config,
                          const char* json_path, const char* table_path) {
  SGF_REQUIRE(pools && config, "null argument");
  return guarded([&] {
    if (json_path)
      sgf::write_text(json_path, sgf::pools_to_json_text(pools->value, config->value.network));
    if (table_path) sgf::write_text(table_path, sgf::pools_table(pools->value));
  });
}

sgf_status sgf_pools_load(const char* json_path, sgf_pools** out) {
  SGF_REQUIRE(json_path && out, "null argument");
  return guarded([&] {
    *out = new sgf_pools{sgf::pools_from_json_text(sgf::read_text(json_path))};
  });
}

sgf_status sgf_pools_channels(const sgf_pools* pools, int* count) {
  SGF_REQUIRE(pools && count, "null argument");
  *count = static_cast<int>(pools->value.channels.size());
  return SGF_OK;
}

sgf_status sgf_pools_levels(const sgf_pools* pools, int channel, double* watts,
                            size_t capacity, size_t* count) {
  SGF_REQUIRE(pools, "pools is null");
  SGF_REQUIRE(channel >= 0 && channel < static_cast<int>(pools->value.channels.size()),
              "channel out of range");
  const auto& levels = pools->value.channels[static_cast<std::size_t>(channel)].levels;
  if (count) *count = levels.size();
  if (watts)
    for (std::size_t i = 0; i < levels.size() && i < capacity; ++i) watts[i] = levels[i].power;
  return SGF_OK;
}

void sgf_pools_free(sgf_pools* pools) { delete pools; }

sgf_status sgf_compare_baselines(const sgf_trainer* trainer, const sgf_pools* pools,
                                 const char* csv_path, int append) {
  SGF_REQUIRE(trainer && csv_path, "null argument");
  return guarded([&] {
    const sgf::PowerPoolSet set =
        pools ? pools->value : sgf::extract_trainer_pools(trainer->trainer);
    sgf::write_comparison(csv_path, sgf::compare_protocols(trainer->trainer, set), append != 0);
  });
}

sgf_status sgf_sweep(const sgf_config* config, sgf_sweep_kind kind, const char* csv_path,
                     sgf_progress_fn progress, void* user) {
  SGF_REQUIRE(config && csv_path, "null argument");
  return guarded([&] {
    config->value.validate();
    sgf::SweepProgress cb;
    if (progress)
      cb = [progress, user](const sgf::SweepRow& row) {
        progress(row.axis.c_str(), row.value, row.run.seed, row.run.final_average,
                 row.run.plateau, row.run.seconds, user);
      };
    std::vector<sgf::SweepRow> rows;
    switch (kind) {
      case SGF_SWEEP_LEVELS: rows = sgf::sweep_power_levels(config->value, cb); break;
      case SGF_SWEEP_CLUSTER: rows = sgf::sweep_cluster_size(config->value, cb); break;
      case SGF_SWEEP_AGENTS: rows = sgf::sweep_agent_count(config->value, cb); break;
      default: throw sgf::ConfigError("sweep: unknown sweep kind");
    }
    sgf::write_sweep(csv_path, rows);
  });
}

sgf_status sgf_write_manifest(const sgf_config* config, const char* command,
                              const char* const* outputs, size_t num_outputs, double seconds,
                              const char* path) {
  SGF_REQUIRE(config && command && path, "null argument");
  SGF_REQUIRE(outputs || num_outputs == 0, "outputs is null");
  return guarded([&] {
    sgf::RunManifest m;
    m.command = command;
    m.config = config->value;
    for (std::size_t i = 0; i < num_outputs; ++i) m.outputs.emplace_back(outputs[i]);
    m.seconds = seconds;
    sgf::write_manifest(path, m);
  });
}

}  // extern "C"
