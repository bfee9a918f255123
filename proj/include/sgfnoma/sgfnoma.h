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

/*
 * C interface to the sgfnoma simulator and trainer.
 *
 * Every function returns an sgf_status. On failure, sgf_last_error() returns
 * a description of the most recent error on the calling thread; the string
 * stays valid until the next failing call on that thread.
 *
 * Handles are opaque and owned by the caller; release them with the matching
 * *_free function (NULL is accepted). Handles are not thread-safe; distinct
 * handles may be used from different threads.
 */

#ifndef SGFNOMA_SGFNOMA_H_
#define SGFNOMA_SGFNOMA_H_

#include <stddef.h>
#include <stdint.h>

#if defined(SGF_BUILDING_LIBRARY)
#define SGF_API __attribute__((visibility("default")))
#else
#define SGF_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sgf_status {
  SGF_OK = 0,
  SGF_ERR_ARGUMENT = 1,  /* null handle or invalid argument */
  SGF_ERR_CONFIG = 2,    /* bad configuration; message names the key */
  SGF_ERR_DIMENSION = 3, /* shape or architecture mismatch */
  SGF_ERR_TRAINING = 4,  /* numerical failure during learning */
  SGF_ERR_IO = 5,        /* file could not be opened, read or written */
  SGF_ERR_FORMAT = 6,    /* malformed file */
  SGF_ERR_INTERNAL = 7
} sgf_status;

typedef struct sgf_config sgf_config;
typedef struct sgf_trainer sgf_trainer;
typedef struct sgf_pools sgf_pools;

typedef struct sgf_stats {
  long long slots;
  double mean_capacity;     /* sum rate, bits/s/Hz per slot */
  double mean_throughput;   /* QoS-qualified decoded sum rate */
  double mean_reward;
  double constraint_rate;   /* share of slots meeting every constraint */
  double gb_violation_rate; /* share of GB user-slots below target */
  double mean_gf_rate;
} sgf_stats;

typedef enum sgf_sweep_kind {
  SGF_SWEEP_LEVELS = 0,  /* number of power levels */
  SGF_SWEEP_CLUSTER = 1, /* GF users per sub-channel */
  SGF_SWEEP_AGENTS = 2   /* number of GF users */
} sgf_sweep_kind;

/* Called after each (value, seed) run of a sweep. */
typedef void (*sgf_progress_fn)(const char* axis, int value, uint64_t seed,
                                double final_average, int plateau_episode,
                                double seconds, void* user);

SGF_API const char* sgf_version(void);
SGF_API const char* sgf_last_error(void);
SGF_API const char* sgf_status_name(sgf_status status);

/* ---- configuration ---- */

SGF_API sgf_status sgf_config_new(sgf_config** out);
/* Loads a JSON document; `path` may be NULL for defaults. */
SGF_API sgf_status sgf_config_load(const char* path, sgf_config** out);
/* Sets one key; `value` is JSON text or a bare string. Not validated until
 * sgf_config_validate or first use. */
SGF_API sgf_status sgf_config_set(sgf_config* config, const char* key, const char* value);
SGF_API sgf_status sgf_config_validate(const sgf_config* config);
/* Writes the resolved configuration as JSON. `required` (may be NULL)
 * receives the size including the terminating NUL. */
SGF_API sgf_status sgf_config_to_json(const sgf_config* config, char* buffer,
                                      size_t capacity, size_t* required);
SGF_API sgf_status sgf_config_clone(const sgf_config* config, sgf_config** out);
SGF_API void sgf_config_free(sgf_config* config);

/* ---- training ---- */

SGF_API sgf_status sgf_trainer_new(const sgf_config* config, sgf_trainer** out);
/* `expected` may be NULL; otherwise its architecture must match the file. */
SGF_API sgf_status sgf_trainer_load(const char* path, const sgf_config* expected,
                                    sgf_trainer** out);
SGF_API sgf_status sgf_trainer_save(const sgf_trainer* trainer, const char* path,
                                    int include_buffers);
/* Starts a per-step metrics file; rows are written as training proceeds. */
SGF_API sgf_status sgf_trainer_open_metrics(sgf_trainer* trainer, const char* csv_path);
/* Runs up to `episodes` more episodes; negative runs to completion. */
SGF_API sgf_status sgf_trainer_run(sgf_trainer* trainer, int episodes);
SGF_API sgf_status sgf_trainer_progress(const sgf_trainer* trainer, int* episodes_done,
                                        long long* global_step);
/* Mean reward per completed episode. */
SGF_API sgf_status sgf_trainer_episode_rewards(const sgf_trainer* trainer, double* out,
                                               size_t capacity, size_t* count);
SGF_API sgf_status sgf_trainer_write_summary(const sgf_trainer* trainer, const char* csv_path);
/* Greedy evaluation; `slots_csv` may be NULL. `episodes` <= 0 uses the
 * configured eval_episodes. */
SGF_API sgf_status sgf_trainer_evaluate(const sgf_trainer* trainer, int episodes,
                                        const char* slots_csv, sgf_stats* out);
SGF_API sgf_status sgf_trainer_config(const sgf_trainer* trainer, sgf_config** out);
SGF_API void sgf_trainer_free(sgf_trainer* trainer);

/* ---- power pools ---- */

SGF_API sgf_status sgf_pools_extract(const sgf_trainer* trainer, sgf_pools** out);
/* Either path may be NULL. */
SGF_API sgf_status sgf_pools_save(const sgf_pools* pools, const sgf_config* config,
                                  const char* json_path, const char* table_path);
SGF_API sgf_status sgf_pools_load(const char* json_path, sgf_pools** out);
SGF_API sgf_status sgf_pools_channels(const sgf_pools* pools, int* count);
/* Pool of `channel` in watts. */
SGF_API sgf_status sgf_pools_levels(const sgf_pools* pools, int channel, double* watts,
                                    size_t capacity, size_t* count);
SGF_API void sgf_pools_free(sgf_pools* pools);

/* ---- comparisons and sweeps ---- */

/* Paired comparison of the learned policy, pooled open-loop access and the
 * baselines. `pools` may be NULL (extracted from the trainer). Rows are
 * appended when `append` is non-zero. */
SGF_API sgf_status sgf_compare_baselines(const sgf_trainer* trainer, const sgf_pools* pools,
                                         const char* csv_path, int append);
/* Trains one run per (value, seed) and writes one row each. `progress` may
 * be NULL. */
SGF_API sgf_status sgf_sweep(const sgf_config* config, sgf_sweep_kind kind,
                             const char* csv_path, sgf_progress_fn progress, void* user);

SGF_API sgf_status sgf_write_manifest(const sgf_config* config, const char* command,
                                      const char* const* outputs, size_t num_outputs,
                                      double seconds, const char* path);

#ifdef __cplusplus
}
#endif

#endif /* SGFNOMA_SGFNOMA_H_ */
