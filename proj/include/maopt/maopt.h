// SPDX-License-Identifier: Apache-2.0
//
// maopt - joint antenna positioning and beamforming for movable-antenna arrays
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef MAOPT_H
#define MAOPT_H

/* C interface of the maopt shared library. Every function returns a status
 * code; on failure mao_last_error() describes the most recent error raised on
 * the calling thread. Handles are opaque and owned by the caller, who releases
 * them with the matching *_free function (NULL is accepted there). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(MAOPT_BUILDING_LIBRARY)
#    define MAO_API __declspec(dllexport)
#  else
#    define MAO_API __declspec(dllimport)
#  endif
#else
#  define MAO_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mao_status {
    MAO_OK = 0,
    MAO_ERR_INVALID_ARGUMENT = 1,
    MAO_ERR_SHAPE = 2,
    MAO_ERR_INFEASIBLE = 3,
    MAO_ERR_NUMERIC = 4,
    MAO_ERR_BUDGET = 5,
    MAO_ERR_IO = 6,
    MAO_ERR_INTERNAL = 7
} mao_status;

typedef enum mao_split {
    MAO_SPLIT_TRAIN = 0, /* channels from the master seed */
    MAO_SPLIT_EVAL = 1   /* held-out channels from a derived seed */
} mao_split;

typedef struct mao_config mao_config;
typedef struct mao_dataset mao_dataset;
typedef struct mao_model mao_model;

typedef struct mao_eval_metrics {
    double mean_sum_rate;
    double median_sum_rate;
    double std_sum_rate;
    double feasibility;
    double mean_ms;
    double best_of_k_mean; /* valid when has_best_of_k != 0 */
    int has_best_of_k;
} mao_eval_metrics;

/* Receives one human-readable progress line (no trailing newline). */
typedef void (*mao_log_fn)(const char *line, void *user);

MAO_API const char *mao_version(void);
MAO_API const char *mao_last_error(void);
MAO_API const char *mao_status_name(mao_status status);

/* Configuration: flat key-value settings, see the README for keys. */
MAO_API mao_status mao_config_create(mao_config **out);
MAO_API mao_status mao_config_load(const char *path, mao_config **out);
MAO_API mao_status mao_config_set(mao_config *cfg, const char *key, const char *value);
MAO_API mao_status mao_config_set_seed(mao_config *cfg, uint64_t seed);
/* Resolves and checks every key without running anything. */
MAO_API mao_status mao_config_validate(const mao_config *cfg);
MAO_API void mao_config_free(mao_config *cfg);

/* Datasets */
MAO_API mao_status mao_dataset_generate(const mao_config *cfg, size_t count, mao_split split, mao_dataset **out);
MAO_API mao_status mao_dataset_load(const mao_config *cfg, const char *path, mao_dataset **out);
MAO_API mao_status mao_dataset_save(const mao_dataset *data, const char *path);
MAO_API mao_status mao_dataset_info(const mao_dataset *data, size_t *count, size_t *sites, size_t *users);
/* Copies sample `index` as 2*N*K doubles (re, im; n-major) into `out`. */
MAO_API mao_status mao_dataset_channel(const mao_dataset *data, size_t index, double *out, size_t out_len);
MAO_API void mao_dataset_free(mao_dataset *data);

/* Models (positioning and beamforming networks) */
MAO_API mao_status mao_model_create(const mao_config *cfg, mao_model **out);
MAO_API mao_status mao_model_load(const char *path, mao_model **out);
MAO_API mao_status mao_model_save(const mao_model *model, const char *path);
MAO_API mao_status mao_model_step(const mao_model *model, int64_t *step);
MAO_API void mao_model_free(mao_model *model);

/* Trains until epochs * steps_per_epoch steps are done. `eval`, `checkpoint`
 * and `curve_csv` may be NULL. */
MAO_API mao_status mao_train(const mao_config *cfg, mao_model *model, const mao_dataset *train,
                             const mao_dataset *eval, const char *checkpoint, const char *curve_csv,
                             mao_log_fn log, void *user);

/* Evaluates `method` (proposed, random+wmmse, strongest+wmmse, strongest+zf,
 * oracle) at the configured p_max_dbm. `model` is required for "proposed".
 * When `csv_path` is non-NULL one results row is written there. */
MAO_API mao_status mao_evaluate(const mao_config *cfg, const mao_model *model, const char *method,
                                const mao_dataset *data, const char *csv_path, mao_eval_metrics *out);

/* Sweeps the configured methods over p_max_dbm_list and writes results.csv,
 * plot_sum_rate.csv and plot_time.csv into `output_dir`. */
MAO_API mao_status mao_bench(const mao_config *cfg, const mao_model *model, const mao_dataset *data,
                             const char *output_dir);

/* Exhaustive search on samples [first, first + count); one CSV row each. */
MAO_API mao_status mao_oracle(const mao_config *cfg, const mao_dataset *data, size_t first, size_t count,
                              const char *csv_path, mao_log_fn log, void *user);

/* Whole CLI subcommands driven by configuration keys alone
 * ("gen-data", "train", "eval", "bench", "oracle", "init"). */
MAO_API mao_status mao_run_command(const mao_config *cfg, const char *command, mao_log_fn log, void *user);

#ifdef __cplusplus
}
#endif

#endif
