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

#ifndef MAOPT_TRAINING_HPP
#define MAOPT_TRAINING_HPP

#include "maopt/beamforming_net.hpp"
#include "maopt/channel.hpp"
#include "maopt/positioning_net.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace maopt {

// Both networks, their parameter stores and the geometry they were built for.
struct Model {
    PositioningConfig positioning;
    BeamformingConfig beamforming;
    double wavelength = 0.060;
    ad::ParameterStore theta_p;
    ad::ParameterStore theta_w;
    PositioningNet pnet;
    BeamformingNet bnet;
    std::int64_t step = 0;  // completed training steps

    static Model create(const PositioningConfig &p, const BeamformingConfig &w, double wavelength,
                        std::uint64_t seed);
};

// Checkpoint entries: "meta.*" scalars, "theta_p.*" / "theta_w.*" weights,
// then "adam.m.*", "adam.v.*", "adam.t.*" optimiser state per weight.
void save_model(const std::filesystem::path &path, const Model &model);
Model load_model(const std::filesystem::path &path);

enum class Baseline { none, batch_mean };

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t steps_per_epoch = 50;
    std::size_t batch = 1024;
    double learning_rate = 1e-4;
    Baseline baseline = Baseline::none;
    double p_max = 0.1;          // W
    std::size_t antennas = 6;    // M
    std::uint64_t seed = 1;
    std::size_t eval_every = 50; // steps; 0 disables periodic evaluation
    double clip_norm = 10.0;     // global-norm cap per parameter store
    bool record_timing = true;

    void validate() const;
};

struct RolloutSample {
    DecoderTrace trace;
    BeamformerSet w;
    double reward = 0.0;
};

// Sampled rollout and beamformer for every channel; sample i draws its
// decisions from Rng(derive_seed(seed, Stream::rollout, step, i)).
std::vector<RolloutSample> rollout_batch(const Model &model, const std::vector<const ChannelRealization *> &batch,
                                         std::size_t m, double p_max, std::uint64_t seed, std::uint64_t step);

// Mean over the batch of (R - b) grad log p(A | h), b from the baseline mode,
// obtained by replaying each selection.
ad::GradientBuffer positioning_gradient(const Model &model, const std::vector<const ChannelRealization *> &batch,
                                        const std::vector<RolloutSample> &results, double p_max, Baseline baseline);

// Gradient of the batch-mean sum rate with respect to theta_w, selections fixed.
ad::GradientBuffer beamforming_gradient(const Model &model, const std::vector<const ChannelRealization *> &batch,
                                        const std::vector<RolloutSample> &results, double p_max);

struct StepMetrics {
    double mean_reward = 0.0;
    double mean_log_prob = 0.0;
    double grad_norm_p = 0.0;  // before clipping
    double grad_norm_w = 0.0;
};

// Gradients of one batch in a single pass per sample: the positioning tape is
// kept alive until the reward is known, then backpropagated once and
// accumulated both with weight R_i and with weight 1, so any baseline can be
// applied afterwards.
struct FusedGradients {
    ad::GradientBuffer grad_p;  // ascent direction for theta_p
    ad::GradientBuffer grad_w;  // ascent direction for theta_w
    StepMetrics metrics;
    std::vector<RolloutSample> samples;
};
FusedGradients fused_gradients(const Model &model, const std::vector<const ChannelRealization *> &batch,
                               const TrainConfig &cfg, std::uint64_t step);

// One update: theta_w first, then theta_p, both ascending. Nothing changes if
// either gradient is non-finite (Error(numeric) naming the parameter).
StepMetrics train_step(Model &model, const std::vector<const ChannelRealization *> &batch, const TrainConfig &cfg);

struct CurvePoint {
    std::int64_t step = 0;
    double mean_reward = 0.0;
    std::optional<double> eval_reward;
    double grad_norm_p = 0.0;
    double grad_norm_w = 0.0;
    double wall_ms = 0.0;
};

struct TrainOutputs {
    std::optional<std::filesystem::path> checkpoint;  // rewritten after every epoch
    std::optional<std::filesystem::path> curve_csv;
    std::function<void(const CurvePoint &)> on_step;
};

// Runs the remaining steps of epochs * steps_per_epoch from model.step on.
// Epoch e visits the training set in the order of a permutation drawn from
// (seed, Stream::batch, e); batches wrap around the set.
std::vector<CurvePoint> train_loop(Model &model, const TrainConfig &cfg, const Dataset &train, const Dataset *eval,
                                   const TrainOutputs &out = {});

void write_curve_csv(const std::filesystem::path &path, const std::vector<CurvePoint> &curve);

struct EvalMetrics {
    double mean_sum_rate = 0.0;
    double median_sum_rate = 0.0;
    double std_sum_rate = 0.0;
    double feasibility = 0.0;
    double mean_ms = 0.0;
    std::vector<double> rates;
    std::optional<double> best_of_k_mean;  // set when best_of_k > 0
};

// Greedy decode (plus optional best-of-k sampling) and the beamforming net
// on every sample.
EvalMetrics evaluate(const Model &model, const Dataset &data, std::size_t m, double p_max,
                     std::size_t best_of_k = 0, std::uint64_t seed = 1, bool record_timing = true);

// Summary statistics shared by every evaluation path.
void summarize(EvalMetrics &metrics);

} // namespace maopt

#endif
