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

#ifndef MAOPT_EXPERIMENT_HPP
#define MAOPT_EXPERIMENT_HPP

#include "maopt/channel.hpp"
#include "maopt/classic_solvers.hpp"
#include "maopt/config.hpp"
#include "maopt/training.hpp"

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace maopt {

// Everything a CLI run can configure. Keys (all optional):
//
//   seed                      master seed for channels, weights, rollouts
//   wavelength region_side points_per_side paths ref_loss_db
//   pathloss_exponent dist_min dist_max noise_dbm users min_spacing
//   antennas                  M
//   antennas_list             M sweep for bench (defaults to antennas)
//   p_max_dbm                 budget for train / eval
//   p_max_dbm_list            sweep for bench, comma separated
//   methods                   subset of proposed, random+wmmse,
//                             strongest+wmmse, strongest+zf, oracle
//   embed hidden heads encoder_layers clip bf_width bf_layers
//   epochs steps_per_epoch batch learning_rate baseline (none | batch-mean)
//   eval_every clip_norm record_timing best_of_k oracle_budget
//   count                     gen-data sample count
//   train_samples eval_samples bench_samples
//   dataset train_dataset eval_dataset checkpoint curve output output_dir
//   oracle_first oracle_count resume
struct RunSettings {
    ChannelGenConfig channel;
    std::size_t antennas = 6;
    double p_max_dbm = 20.0;
    std::vector<double> sweep_dbm{5.0, 10.0, 15.0, 20.0};
    std::vector<std::size_t> sweep_antennas;
    std::vector<std::string> methods{"random+wmmse", "strongest+wmmse", "strongest+zf"};
    PositioningConfig positioning;
    BeamformingConfig beamforming;
    TrainConfig train;
    std::size_t best_of_k = 0;
    std::uint64_t oracle_budget = 2000000;
    bool record_timing = true;
    bool resume = false;

    std::size_t count = 1000;
    std::size_t train_samples = 50000;
    std::size_t eval_samples = 1000;
    std::size_t bench_samples = 500;
    std::size_t oracle_first = 0;
    std::size_t oracle_count = 10;

    std::string dataset = "dataset.bin";
    std::string train_dataset;
    std::string eval_dataset;
    std::string checkpoint = "model.ckpt";
    std::string curve = "curve.csv";
    std::string output = "eval.csv";
    std::string output_dir = "results";

    std::uint64_t seed() const noexcept { return channel.seed; }
    double p_max_watts() const { return dbm_to_watts(p_max_dbm); }

    // Reads every documented key; unknown keys are rejected. `seed_override`
    // replaces the `seed` key.
    static RunSettings from_config(const KeyValueConfig &cfg, std::optional<std::uint64_t> seed_override = {});
    static const std::set<std::string> &known_keys();
};

// Channel seed of the held-out split: training data uses the master seed,
// evaluation data a seed derived from it, so the two never share samples.
std::uint64_t eval_split_seed(std::uint64_t master);

Dataset make_train_set(const RunSettings &s);
Dataset make_eval_set(const RunSettings &s, std::size_t count);

struct ResultRow {
    std::string method;
    std::size_t n = 0, m = 0, k = 0;
    double p_max_dbm = 0.0;
    double mean_sum_rate = 0.0;
    double std = 0.0;
    double feasibility = 0.0;
    double mean_ms = 0.0;
};

// Evaluates one method on every sample; all methods see the same samples.
EvalMetrics evaluate_method(const std::string &method, const Dataset &data, std::size_t m, double p_max,
                            const Model *model, const RunSettings &s);

// Rows ordered by M, then P_max, then method as listed.
std::vector<ResultRow> run_experiment(const RunSettings &s, const Dataset &data, const Model *model);

void write_results_csv(const std::filesystem::path &path, const std::vector<ResultRow> &rows);
// (x, series, y) triples: x = P_max in dBm, series = method, y = `value`.
void write_plot_csv(const std::filesystem::path &path, const std::vector<ResultRow> &rows, bool timing);

const std::vector<std::string> &all_methods();

} // namespace maopt

#endif
