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

#include "maopt/positioning_net.hpp"
#include "maopt/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace maopt {

using ad::Shape;
using ad::Tape;
using ad::Tensor;
using ad::Var;

void PositioningConfig::validate() const
{
    if (embed == 0 || hidden == 0 || heads == 0)
        throw Error(Errc::invalid_argument, "positioning net: widths and head count must be positive");
    if (hidden % heads != 0)
        throw Error(Errc::invalid_argument, "positioning net: hidden width " + std::to_string(hidden) +
                                                " is not divisible by " + std::to_string(heads) + " heads");
    if (!(clip > 0.0))
        throw Error(Errc::invalid_argument, "positioning net: clip constant must be positive");
}

double channel_feature_scale(const std::vector<double> &noise, double p_max)
{
    if (noise.empty())
        throw Error(Errc::invalid_argument, "features: no users");
    const double mean = std::accumulate(noise.begin(), noise.end(), 0.0) / static_cast<double>(noise.size());
    if (!(mean > 0.0) || !(p_max > 0.0))
        throw Error(Errc::invalid_argument, "features: noise and power budget must be positive");
    return std::sqrt(p_max / mean);
}

SampleFeatures make_features(const ChannelRealization &h, double p_max, double wavelength)
{
    if (!h.grid || h.grid->size() != h.sites())
        throw Error(Errc::shape_mismatch, "features: channel rows do not match the grid");
    const std::size_t N = h.sites(), K = h.users();
    const double s = channel_feature_scale(h.noise, p_max);
    SampleFeatures f;
    f.graph = BipartiteIndex(N, K);
    f.edge = Tensor(Shape{N * K, 2});
    f.position = Tensor(Shape{N, 2});
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t k = 0; k < K; ++k) {
            const cdouble v = h.h(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k)) * s;
            f.edge.at(n * K + k, 0) = v.real();
            f.edge.at(n * K + k, 1) = v.imag();
        }
        f.position.at(n, 0) = h.grid->points[n].x / wavelength;
        f.position.at(n, 1) = h.grid->points[n].y / wavelength;
    }
    return f;
}

int masked_argmax(std::span<const double> values, const std::vector<bool> &mask)
{
    int best = -1;
    for (std::size_t n = 0; n < values.size(); ++n)
        if (mask[n] && (best < 0 || values[n] > values[static_cast<std::size_t>(best)]))
            best = static_cast<int>(n);
    if (best < 0)
        throw NoFeasibleChoice();
    return best;
}

int sample_index(std::span<const double> probabilities, const std::vector<bool> &mask, Rng &rng)
{
    const double u = rng.uniform();
    double cum = 0.0;
    int last = -1;
    for (std::size_t n = 0; n < probabilities.size(); ++n) {
        if (!mask[n])
            continue;
        last = static_cast<int>(n);
        cum += probabilities[n];
        if (u < cum)
            return last;
    }
    // Rounding left the cumulative sum just under u.
    if (last < 0)
        throw NoFeasibleChoice();
    return last;
}

PositioningNet PositioningNet::create(ad::ParameterStore &store, const PositioningConfig &cfg, Rng &rng,
                                      const std::string &prefix)
{
    cfg.validate();
    PositioningNet net;
    net.cfg_ = cfg;
    const std::size_t de = cfg.embed, dh = cfg.hidden, dv = cfg.head_width();
    const std::string enc = prefix + "enc.";
    net.init_edge_ = Mlp::create(store, enc + "init_edge", 2, de, rng);
    net.init_node_ = Mlp::create(store, enc + "init_node", 2, de, rng);
    for (std::size_t l = 0; l < cfg.layers; ++l)
        net.layers_.push_back(EngnnLayer::create(store, enc + "layer" + std::to_string(l + 1), de, rng));

    const std::string dec = prefix + "dec.";
    net.ctx_[0] = Mlp::create(store, dec + "ctx1", 2 * dh, dh, rng);
    net.ctx_[1] = Mlp::create(store, dec + "ctx2", 2 + dh, dh, rng);
    net.ctx_[2] = Mlp::create(store, dec + "ctx3", 2, dh, rng);
    net.ctx_[3] = Mlp::create(store, dec + "ctx4", de, dh, rng);
    net.r_star_ = store.add(dec + "r_star", uniform_init(Shape{1, dh}, dh, rng));
    for (std::size_t h = 0; h < cfg.heads; ++h) {
        const std::string head = dec + "mha.head" + std::to_string(h + 1) + ".";
        net.wq_.push_back(store.add(head + "wq", uniform_init(Shape{dh, dv}, dh, rng)));
        net.wk_.push_back(store.add(head + "wk", uniform_init(Shape{de, dv}, de, rng)));
        net.wv_.push_back(store.add(head + "wv", uniform_init(Shape{de, dv}, de, rng)));
        net.wo_.push_back(store.add(head + "wo", uniform_init(Shape{dv, dh}, dv, rng)));
    }
    net.pointer_q_ = store.add(dec + "pointer.wq", uniform_init(Shape{dh, dh}, dh, rng));
    net.pointer_k_ = store.add(dec + "pointer.wk", uniform_init(Shape{de, dh}, de, rng));
    return net;
}

EngnnState PositioningNet::encode_init(Tape &tape, const ad::ParameterStore &store, const SampleFeatures &f) const
{
    EngnnState s;
    s.edge = init_edge_(tape, store, tape.constant(f.edge));
    s.node = init_node_(tape, store, tape.constant(f.position));
    s.user = tape.constant(Tensor(Shape{f.graph.right, cfg_.embed}));
    return s;
}

EngnnState PositioningNet::encoder_layer(Tape &tape, const ad::ParameterStore &store, const EngnnState &s,
                                         const SampleFeatures &f, std::size_t layer) const
{
    return layers_.at(layer)(tape, store, s, f.graph);
}

Var PositioningNet::encode(Tape &tape, const ad::ParameterStore &store, const SampleFeatures &f,
                           std::optional<std::size_t> layers) const
{
    const std::size_t count = layers.value_or(layers_.size());
    if (count > layers_.size())
        throw Error(Errc::invalid_argument, "encode: requested " + std::to_string(count) + " layers, net has " +
                                                std::to_string(layers_.size()));
    EngnnState s = encode_init(tape, store, f);
    for (std::size_t l = 0; l < count; ++l)
        s = encoder_layer(tape, store, s, f, l);
    return s.node;
}

PositioningNet::Encoded PositioningNet::prepare(Tape &tape, const ad::ParameterStore &store,
                                                const SampleFeatures &f) const
{
    Encoded e;
    e.sites = f.graph.left;
    e.embeddings = encode(tape, store, f);

    Var per_edge = ctx_[2](tape, store, tape.constant(f.edge));
    Var per_site = ctx_[1](tape, store, {{tape.constant(f.position)}, {mean_over_right(per_edge, f.graph)}});
    e.global_term = ad::reshape(ad::mean_axis(per_site, 0), Shape{1, cfg_.hidden});
    const MlpPart global[] = {{e.global_term}};
    e.global_pre = ctx_[0].partial(tape, store, global, cfg_.hidden);

    for (std::size_t h = 0; h < cfg_.heads; ++h) {
        e.head_keys_t.push_back(ad::transpose(ad::matmul(e.embeddings, tape.parameter(store, wk_[h]))));
        e.head_values.push_back(ad::matmul(e.embeddings, tape.parameter(store, wv_[h])));
    }
    e.pointer_keys_t = ad::transpose(ad::matmul(e.embeddings, tape.parameter(store, pointer_k_)));
    return e;
}

Var PositioningNet::selected_feature(Tape &tape, const ad::ParameterStore &store, const Encoded &enc,
                                     int index) const
{
    const std::size_t row[] = {static_cast<std::size_t>(index)};
    return ctx_[3](tape, store, ad::gather_rows(enc.embeddings, row));
}

Var PositioningNet::context(Tape &tape, const ad::ParameterStore &store, const Encoded &enc, Var selected_sum,
                            std::size_t prefix_length) const
{
    Var first = prefix_length == 0 ? tape.parameter(store, r_star_)
                                   : ad::scale(selected_sum, 1.0 / static_cast<double>(prefix_length));
    const MlpPart part[] = {{first}};
    Var pre = ad::add(ctx_[0].partial(tape, store, part, 0), enc.global_pre);
    return ctx_[0].finish(tape, store, pre);
}

PositioningNet::Step PositioningNet::decode_step(Tape &tape, const ad::ParameterStore &store, const Encoded &enc,
                                                 Var context, const std::vector<bool> &mask) const
{
    if (mask.size() != enc.sites)
        throw Error(Errc::shape_mismatch, "decode_step: mask length " + std::to_string(mask.size()) + " vs " +
                                              std::to_string(enc.sites) + " sampling points");
    if (std::find(mask.begin(), mask.end(), true) == mask.end())
        throw NoFeasibleChoice();
    const double inv_sqrt_dv = 1.0 / std::sqrt(static_cast<double>(cfg_.head_width()));
    Var updated;
    for (std::size_t h = 0; h < cfg_.heads; ++h) {
        Var q = ad::matmul(context, tape.parameter(store, wq_[h]));
        Var relevance = ad::scale(ad::matmul(q, enc.head_keys_t[h]), inv_sqrt_dv);
        Var weights = ad::masked_softmax(relevance, mask);
        Var head = ad::matmul(ad::matmul(weights, enc.head_values[h]), tape.parameter(store, wo_[h]));
        updated = updated ? ad::add(updated, head) : head;
    }
    Var q = ad::matmul(updated, tape.parameter(store, pointer_q_));
    Var compat = ad::scale(ad::matmul(q, enc.pointer_keys_t), 1.0 / std::sqrt(static_cast<double>(cfg_.hidden)));
    Step s;
    s.logits = ad::scale(ad::tanh(compat), cfg_.clip);
    s.probabilities = ad::masked_softmax(s.logits, mask);
    return s;
}

namespace {

Var pick(Var probabilities, std::size_t index)
{
    const std::size_t n = probabilities.value().size();
    const std::size_t row[] = {index};
    return ad::gather_rows(ad::reshape(probabilities, Shape{n, 1}), row);
}

} // namespace

PositioningNet::Rollout PositioningNet::rollout(Tape &tape, const ad::ParameterStore &store, const Encoded &enc,
                                                const SamplingGrid &grid, std::size_t m, DecodeMode mode,
                                                Rng *rng) const
{
    if (grid.size() != enc.sites)
        throw Error(Errc::shape_mismatch, "rollout: grid size differs from the encoded sample");
    if (m < 1 || m > grid.size())
        throw Error(Errc::invalid_argument, "rollout: M must be in [1, N]");
    if (mode == DecodeMode::sample && rng == nullptr)
        throw Error(Errc::invalid_argument, "rollout: sampling mode needs a random generator");
    Rollout r;
    std::vector<bool> mask(grid.size(), true);
    Var selected_sum;
    for (std::size_t t = 0; t < m; ++t) {
        if (std::find(mask.begin(), mask.end(), true) == mask.end())
            throw NoFeasibleChoice(r.trace.choices);
        Var c = context(tape, store, enc, selected_sum, t);
        Step step = decode_step(tape, store, enc, c, mask);
        const int a = mode == DecodeMode::greedy ? masked_argmax(step.logits.value().values(), mask)
                                                 : sample_index(step.probabilities.value().values(), mask, *rng);
        Var lp = ad::log(pick(step.probabilities, static_cast<std::size_t>(a)));
        r.log_prob = r.log_prob ? ad::add(r.log_prob, lp) : lp;
        r.trace.choices.push_back(a);
        r.trace.step_log_prob.push_back(lp.value()[0]);
        r.trace.total_log_prob += lp.value()[0];
        restrict_mask(mask, a, grid);
        if (t + 1 < m) {
            Var feat = selected_feature(tape, store, enc, a);
            selected_sum = selected_sum ? ad::add(selected_sum, feat) : feat;
        }
    }
    return r;
}

DecoderTrace PositioningNet::rollout(const ad::ParameterStore &store, const SampleFeatures &f,
                                     const SamplingGrid &grid, std::size_t m, DecodeMode mode, Rng *rng) const
{
    Tape tape(false);
    Encoded enc = prepare(tape, store, f);
    return rollout(tape, store, enc, grid, m, mode, rng).trace;
}

Var PositioningNet::log_prob_of(Tape &tape, const ad::ParameterStore &store, const Encoded &enc,
                                const SamplingGrid &grid, const SelectionSet &selection) const
{
    if (selection.empty())
        throw Error(Errc::invalid_argument, "log_prob_of: empty selection");
    std::vector<bool> mask(grid.size(), true);
    Var total, selected_sum;
    for (std::size_t t = 0; t < selection.size(); ++t) {
        const int a = selection[t];
        if (a < 0 || static_cast<std::size_t>(a) >= grid.size() || !mask[static_cast<std::size_t>(a)])
            throw Error(Errc::infeasible, "log_prob_of: choice " + std::to_string(a) + " at step " +
                                              std::to_string(t + 1) + " is not available");
        Var c = context(tape, store, enc, selected_sum, t);
        Step step = decode_step(tape, store, enc, c, mask);
        Var lp = ad::log(pick(step.probabilities, static_cast<std::size_t>(a)));
        total = total ? ad::add(total, lp) : lp;
        restrict_mask(mask, a, grid);
        if (t + 1 < selection.size()) {
            Var feat = selected_feature(tape, store, enc, a);
            selected_sum = selected_sum ? ad::add(selected_sum, feat) : feat;
        }
    }
    return total;
}

} // namespace maopt
