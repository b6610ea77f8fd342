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

#ifndef MAOPT_POSITIONING_NET_HPP
#define MAOPT_POSITIONING_NET_HPP

#include "maopt/channel.hpp"
#include "maopt/layers.hpp"
#include "maopt/system_model.hpp"

#include <optional>
#include <string>
#include <vector>

namespace maopt {

struct PositioningConfig {
    std::size_t embed = 128;   // d_e = n_emb
    std::size_t hidden = 256;  // d_h
    std::size_t heads = 8;     // N_h; d_v = d_h / N_h
    std::size_t layers = 3;    // L_E
    double clip = 8.0;         // C

    std::size_t head_width() const { return hidden / heads; }
    void validate() const;
};

// Network inputs for one channel sample. Channel entries are scaled by
// sqrt(P_max / mean noise) and coordinates are expressed in wavelengths, so
// the nets see dimensionless O(1..10) values.
struct SampleFeatures {
    BipartiteIndex graph;       // N sampling points x K users
    ad::Tensor edge;            // [N*K, 2] (re, im)
    ad::Tensor position;        // [N, 2]
};

double channel_feature_scale(const std::vector<double> &noise, double p_max);
SampleFeatures make_features(const ChannelRealization &h, double p_max, double wavelength);

struct DecoderTrace {
    SelectionSet choices;
    std::vector<double> step_log_prob;
    double total_log_prob = 0.0;
};

enum class DecodeMode { sample, greedy };

class PositioningNet {
public:
    PositioningNet() = default;

    // Registers every weight in `store` under `prefix`, drawing initial values
    // from `rng` in registration order.
    static PositioningNet create(ad::ParameterStore &store, const PositioningConfig &cfg, Rng &rng,
                                 const std::string &prefix = "theta_p.");

    const PositioningConfig &config() const noexcept { return cfg_; }

    // Layer-0 encoder state: edges MLP1E(re, im), SP nodes MLP2E(p), users 0.
    EngnnState encode_init(ad::Tape &tape, const ad::ParameterStore &store, const SampleFeatures &f) const;
    EngnnState encoder_layer(ad::Tape &tape, const ad::ParameterStore &store, const EngnnState &s,
                             const SampleFeatures &f, std::size_t layer) const;
    // Final SP features [N, d_e]; `layers` overrides L_E (0 returns the init features).
    ad::Var encode(ad::Tape &tape, const ad::ParameterStore &store, const SampleFeatures &f,
                   std::optional<std::size_t> layers = std::nullopt) const;

    // Everything that stays fixed while one sample is decoded.
    struct Encoded {
        ad::Var embeddings;                 // [N, d_e]
        ad::Var global_term;                // [1, d_h] mean_n MLP2X(p_n, mean_k MLP3X(h_nk))
        ad::Var global_pre;                 // global term through its block of MLP1X's first stage
        std::vector<ad::Var> head_keys_t;   // per head [d_v, N]
        std::vector<ad::Var> head_values;   // per head [N, d_v]
        ad::Var pointer_keys_t;             // [d_h, N]
        std::size_t sites = 0;
    };
    Encoded prepare(ad::Tape &tape, const ad::ParameterStore &store, const SampleFeatures &f) const;

    // Context for step t = prefix.size() + 1. `selected_sum` is the running sum
    // of MLP4X(r_a) over the prefix (ignored when the prefix is empty).
    ad::Var context(ad::Tape &tape, const ad::ParameterStore &store, const Encoded &enc, ad::Var selected_sum,
                    std::size_t prefix_length) const;
    ad::Var selected_feature(ad::Tape &tape, const ad::ParameterStore &store, const Encoded &enc, int index) const;

    struct Step {
        ad::Var logits;         // [1, N] clipped compatibilities, masked entries untouched
        ad::Var probabilities;  // [1, N]
    };
    Step decode_step(ad::Tape &tape, const ad::ParameterStore &store, const Encoded &enc, ad::Var context,
                     const std::vector<bool> &mask) const;

    struct Rollout {
        DecoderTrace trace;
        ad::Var log_prob;  // [1, 1], differentiable when the tape records
    };
    Rollout rollout(ad::Tape &tape, const ad::ParameterStore &store, const Encoded &enc, const SamplingGrid &grid,
                    std::size_t m, DecodeMode mode, Rng *rng) const;
    DecoderTrace rollout(const ad::ParameterStore &store, const SampleFeatures &f, const SamplingGrid &grid,
                         std::size_t m, DecodeMode mode, Rng *rng) const;

    // Replays the forced choices; throws Error(infeasible) if a choice is masked.
    ad::Var log_prob_of(ad::Tape &tape, const ad::ParameterStore &store, const Encoded &enc,
                        const SamplingGrid &grid, const SelectionSet &selection) const;

private:
    PositioningConfig cfg_;
    Mlp init_edge_, init_node_;
    std::vector<EngnnLayer> layers_;
    Mlp ctx_[4];
    std::size_t r_star_ = 0;
    std::vector<std::size_t> wq_, wk_, wv_, wo_;
    std::size_t pointer_q_ = 0, pointer_k_ = 0;
};

// Index with the largest value among unmasked entries; lowest index on ties.
int masked_argmax(std::span<const double> values, const std::vector<bool> &mask);

// Inverse-CDF draw from a probability vector restricted to the mask.
int sample_index(std::span<const double> probabilities, const std::vector<bool> &mask, Rng &rng);

} // namespace maopt

#endif
