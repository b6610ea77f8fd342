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

#ifndef MAOPT_LAYERS_HPP
#define MAOPT_LAYERS_HPP

#include "maopt/autodiff.hpp"
#include "maopt/rng.hpp"

#include <span>
#include <string>
#include <vector>

namespace maopt {

// y = x W + b with W stored as [in, out]. Weights and bias are initialised
// uniformly in [-1/sqrt(in), 1/sqrt(in)].
struct Linear {
    std::size_t weight = 0;
    std::size_t bias = 0;
    std::size_t in = 0;
    std::size_t out = 0;

    static Linear create(ad::ParameterStore &store, const std::string &name, std::size_t in, std::size_t out,
                         Rng &rng);
    ad::Var operator()(ad::Tape &tape, const ad::ParameterStore &store, ad::Var x) const;
};

// Uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] tensor.
ad::Tensor uniform_init(ad::Shape shape, std::size_t fan_in, Rng &rng);

// One block of a concatenated MLP input. When `rows` is non-empty the block's
// contribution x W_block is gathered by these row indices before summation,
// which equals gathering x first but multiplies fewer rows.
struct MlpPart {
    ad::Var x;
    std::span<const std::size_t> rows = {};
};

// Two linear stages, each followed by relu; hidden width = output width.
struct Mlp {
    Linear first;
    Linear second;

    static Mlp create(ad::ParameterStore &store, const std::string &name, std::size_t in, std::size_t out,
                      Rng &rng);
    std::size_t out() const noexcept { return second.out; }

    ad::Var operator()(ad::Tape &tape, const ad::ParameterStore &store, ad::Var x) const;
    // Same result as operator()(concat(gather(parts))) evaluated block-wise.
    ad::Var operator()(ad::Tape &tape, const ad::ParameterStore &store, std::span<const MlpPart> parts) const;
    ad::Var operator()(ad::Tape &tape, const ad::ParameterStore &store, std::initializer_list<MlpPart> parts) const;

    // First-stage pre-activation of the parts only (no bias); lets callers cache
    // a sample-constant block and add it later through finish().
    ad::Var partial(ad::Tape &tape, const ad::ParameterStore &store, std::span<const MlpPart> parts,
                    std::size_t offset) const;
    ad::Var finish(ad::Tape &tape, const ad::ParameterStore &store, ad::Var pre_activation) const;
};

// Bipartite graph of `left` nodes (sampling points or antennas) and `right`
// nodes (users). Edge features are stored row-major with row n * right + k.
struct BipartiteIndex {
    std::size_t left = 0;
    std::size_t right = 0;
    std::vector<std::size_t> left_of_edge;   // n for every edge row
    std::vector<std::size_t> right_of_edge;  // k for every edge row

    BipartiteIndex() = default;
    BipartiteIndex(std::size_t left, std::size_t right);
    std::size_t edges() const noexcept { return left * right; }
};

struct EngnnState {
    ad::Var user;   // [K, d]
    ad::Var node;   // [N, d]
    ad::Var edge;   // [N*K, d]
};

// Node-edge update with mean aggregation over the old features:
//   user_k'  = MLP2(user_k, mean_n MLP1(node_n, e_nk))
//   node_n'  = MLP4(node_n, mean_k MLP3(user_k, e_nk))
//   e_nk'    = MLP7(e_nk, mean_n' MLP5(e_n'k, user_k), mean_k' MLP6(e_nk', node_n))
struct EngnnLayer {
    Mlp mlp[7];

    static EngnnLayer create(ad::ParameterStore &store, const std::string &name, std::size_t width, Rng &rng);
    EngnnState operator()(ad::Tape &tape, const ad::ParameterStore &store, const EngnnState &s,
                          const BipartiteIndex &graph) const;
};

// Mean of edge rows over the left index (result [K, d]) or the right index
// (result [N, d]).
ad::Var mean_over_left(ad::Var edges, const BipartiteIndex &graph);
ad::Var mean_over_right(ad::Var edges, const BipartiteIndex &graph);

} // namespace maopt

#endif
