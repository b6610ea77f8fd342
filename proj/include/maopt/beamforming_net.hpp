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

#ifndef MAOPT_BEAMFORMING_NET_HPP
#define MAOPT_BEAMFORMING_NET_HPP

#include "maopt/layers.hpp"
#include "maopt/system_model.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace maopt {

struct BeamformingConfig {
    std::size_t width = 64;  // d_w
    std::size_t layers = 3;  // L_W

    void validate() const;
};

// mu and p, each summing to P_max.
struct StructuredBF {
    std::vector<double> mu;
    std::vector<double> p;
};

// w_k = sqrt(p_k) v_k / |v_k|, v_k = (I + sum_i mu_i / noise_k h_i h_i^H)^{-1} h_k,
// solved by Cholesky (the matrix is Hermitian positive definite for mu >= 0).
// A user whose v_k vanishes gets w_k = 0.
BeamformerSet beamformer_from_structure(const Eigen::MatrixXcd &h_sel, const std::vector<double> &mu,
                                        const std::vector<double> &p, const std::vector<double> &noise);

class BeamformingNet {
public:
    BeamformingNet() = default;

    static BeamformingNet create(ad::ParameterStore &store, const BeamformingConfig &cfg, Rng &rng,
                                 const std::string &prefix = "theta_w.");

    const BeamformingConfig &config() const noexcept { return cfg_; }
    // Width of the per-user head output (always 2: raw mu_k and p_k).
    std::size_t head_outputs() const noexcept { return head_.out; }

    struct Output {
        ad::Var mu;        // [1, K] watts
        ad::Var p;         // [1, K] watts
        ad::Var w;         // [2M, K]: column k stacks Re w_k over Im w_k
        ad::Var sum_rate;  // [1, 1] bits/s/Hz
    };
    // Full differentiable map: features, ENGNN, head, structure and sum rate.
    Output forward(ad::Tape &tape, const ad::ParameterStore &store, const Eigen::MatrixXcd &h_sel,
                   const std::vector<double> &noise, double p_max) const;

    // Inference: (mu, p) from the network, w from beamformer_from_structure.
    std::pair<StructuredBF, BeamformerSet> infer(const ad::ParameterStore &store, const Eigen::MatrixXcd &h_sel,
                                                 const std::vector<double> &noise, double p_max) const;

    // Head output after softmax scaling, without the structure solve.
    void head(ad::Tape &tape, const ad::ParameterStore &store, const Eigen::MatrixXcd &h_sel,
              const std::vector<double> &noise, double p_max, ad::Var &mu, ad::Var &p) const;

private:
    BeamformingConfig cfg_;
    Mlp init_edge_;
    std::vector<EngnnLayer> layers_;
    Linear head_;
};

// Tape form of beamformer_from_structure for given (mu, p); returns [2M, K].
ad::Var structured_beamformer(ad::Tape &tape, const Eigen::MatrixXcd &h_sel, const std::vector<double> &noise,
                              ad::Var mu, ad::Var p);

// Tape form of the sum rate for a real-stacked beamformer [2M, K].
ad::Var sum_rate(ad::Tape &tape, const Eigen::MatrixXcd &h_sel, const std::vector<double> &noise, ad::Var w);

// Converts a real-stacked [2M, K] tensor into a BeamformerSet.
BeamformerSet unstack_beamformer(const ad::Tensor &w);

} // namespace maopt

#endif
