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

#include "maopt/beamforming_net.hpp"
#include "maopt/error.hpp"
#include "maopt/positioning_net.hpp"

#include <cmath>
#include <map>
#include <numbers>

namespace maopt {

using ad::Shape;
using ad::Tape;
using ad::Tensor;
using ad::Var;

void BeamformingConfig::validate() const
{
    if (width == 0)
        throw Error(Errc::invalid_argument, "beamforming net: width must be positive");
}

BeamformerSet beamformer_from_structure(const Eigen::MatrixXcd &h, const std::vector<double> &mu,
                                        const std::vector<double> &p, const std::vector<double> &noise)
{
    const Eigen::Index M = h.rows(), K = h.cols();
    if (mu.size() != static_cast<std::size_t>(K) || p.size() != mu.size() || noise.size() != mu.size())
        throw Error(Errc::shape_mismatch, "beamformer_from_structure: expected " + std::to_string(K) +
                                              " entries in mu, p and noise");
    Eigen::MatrixXcd outer = Eigen::MatrixXcd::Zero(M, M);
    for (Eigen::Index i = 0; i < K; ++i) {
        if (mu[static_cast<std::size_t>(i)] < 0.0 || p[static_cast<std::size_t>(i)] < 0.0)
            throw Error(Errc::invalid_argument, "beamformer_from_structure: mu and p must be non-negative");
        outer += mu[static_cast<std::size_t>(i)] * h.col(i) * h.col(i).adjoint();
    }
    BeamformerSet w;
    w.w = Eigen::MatrixXcd::Zero(M, K);
    for (Eigen::Index k = 0; k < K; ++k) {
        const double noise_k = noise[static_cast<std::size_t>(k)];
        if (!(noise_k > 0.0))
            throw Error(Errc::invalid_argument, "beamformer_from_structure: noise power must be positive");
        Eigen::MatrixXcd a = outer / noise_k;
        a.diagonal().array() += 1.0;
        Eigen::LLT<Eigen::MatrixXcd> llt(a);
        if (llt.info() != Eigen::Success)
            throw Error(Errc::numeric, "beamformer_from_structure: system is not positive definite");
        const Eigen::VectorXcd v = llt.solve(h.col(k));
        const double norm = v.norm();
        if (norm > 0.0)
            w.w.col(k) = std::sqrt(p[static_cast<std::size_t>(k)]) * v / norm;
    }
    return w;
}

BeamformerSet unstack_beamformer(const Tensor &w)
{
    const std::size_t M = w.rows() / 2, K = w.cols();
    BeamformerSet out;
    out.w.resize(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(K));
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t k = 0; k < K; ++k)
            out.w(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) = {w.at(m, k), w.at(M + m, k)};
    return out;
}

namespace {

double mean_noise(const std::vector<double> &noise)
{
    double s = 0.0;
    for (double v : noise)
        s += v;
    return s / static_cast<double>(noise.size());
}

// Real embedding [[X, -Y], [Y, X]] of the Hermitian matrix X + jY = h h^H,
// flattened into one row.
void embed_outer(const Eigen::VectorXcd &h, double *row)
{
    const Eigen::Index M = h.size();
    const Eigen::Index W = 2 * M;
    for (Eigen::Index r = 0; r < M; ++r)
        for (Eigen::Index c = 0; c < M; ++c) {
            const cdouble v = h(r) * std::conj(h(c));
            row[r * W + c] = v.real();
            row[r * W + M + c] = -v.imag();
            row[(M + r) * W + c] = v.imag();
            row[(M + r) * W + M + c] = v.real();
        }
}

Tensor ones(std::size_t rows, std::size_t cols) { return Tensor(Shape{rows, cols}, 1.0); }

} // namespace

Var structured_beamformer(Tape &tape, const Eigen::MatrixXcd &h, const std::vector<double> &noise, Var mu, Var p)
{
    const std::size_t M = static_cast<std::size_t>(h.rows()), K = static_cast<std::size_t>(h.cols());
    if (noise.size() != K)
        throw Error(Errc::shape_mismatch, "structured_beamformer: noise length differs from user count");
    // Work with h / sqrt(mean noise) so the system entries stay O(1).
    const double ref = mean_noise(noise);
    const Eigen::MatrixXcd hn = h / std::sqrt(ref);

    Tensor outer(Shape{K, 4 * M * M});
    for (std::size_t i = 0; i < K; ++i)
        embed_outer(hn.col(static_cast<Eigen::Index>(i)), outer.data() + i * 4 * M * M);
    Tensor identity(Shape{2 * M, 2 * M});
    for (std::size_t i = 0; i < 2 * M; ++i)
        identity.at(i, i) = 1.0;
    Var outer_v = tape.constant(std::move(outer));
    Var identity_v = tape.constant(std::move(identity));

    // Users sharing a noise power share one system matrix.
    std::map<double, std::vector<std::size_t>> groups;
    for (std::size_t k = 0; k < K; ++k)
        groups[noise[k]].push_back(k);

    std::vector<Var> blocks;
    std::vector<std::size_t> order;
    for (const auto &[noise_k, users] : groups) {
        Var a = ad::add(identity_v, ad::reshape(ad::scale(ad::matmul(mu, outer_v), ref / noise_k),
                                                Shape{2 * M, 2 * M}));
        Tensor rhs(Shape{2 * M, users.size()});
        for (std::size_t j = 0; j < users.size(); ++j)
            for (std::size_t m = 0; m < M; ++m) {
                const cdouble v = hn(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(users[j]));
                rhs.at(m, j) = v.real();
                rhs.at(M + m, j) = v.imag();
            }
        blocks.push_back(ad::solve_spd(a, tape.constant(std::move(rhs))));
        order.insert(order.end(), users.begin(), users.end());
    }
    Var v = blocks.size() == 1 ? blocks.front() : ad::concat(blocks);
    if (blocks.size() > 1) {
        std::vector<std::size_t> inverse(K);
        for (std::size_t j = 0; j < K; ++j)
            inverse[order[j]] = j;
        v = ad::transpose(ad::gather_rows(ad::transpose(v), inverse));
    }

    // Column norms; the tiny offset keeps a vanishing channel differentiable.
    Var norm2 = ad::matmul(tape.constant(ones(1, 2 * M)), ad::mul(v, v));
    Var factor = ad::mul(ad::sqrt(p), ad::reciprocal(ad::sqrt(ad::add_scalar(norm2, 1e-300))));
    return ad::mul(v, ad::matmul(tape.constant(ones(2 * M, 1)), factor));
}

Var sum_rate(Tape &tape, const Eigen::MatrixXcd &h, const std::vector<double> &noise, Var w)
{
    const std::size_t M = static_cast<std::size_t>(h.rows()), K = static_cast<std::size_t>(h.cols());
    // Row k: [a_k, b_k] and [-b_k, a_k] over sqrt(noise_k), h_k = a_k + j b_k, so
    // h_k^H w_l / sigma_k = row1 . w_l + j row2 . w_l.
    Tensor re(Shape{K, 2 * M}), im(Shape{K, 2 * M});
    for (std::size_t k = 0; k < K; ++k) {
        const double s = 1.0 / std::sqrt(noise[k]);
        for (std::size_t m = 0; m < M; ++m) {
            const cdouble v = h(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) * s;
            re.at(k, m) = v.real();
            re.at(k, M + m) = v.imag();
            im.at(k, m) = -v.imag();
            im.at(k, M + m) = v.real();
        }
    }
    Var g_re = ad::matmul(tape.constant(std::move(re)), w);
    Var g_im = ad::matmul(tape.constant(std::move(im)), w);
    Var g2 = ad::add(ad::mul(g_re, g_re), ad::mul(g_im, g_im));  // [K, K]
    Tensor eye(Shape{K, K});
    for (std::size_t k = 0; k < K; ++k)
        eye.at(k, k) = 1.0;
    Var col_ones = tape.constant(ones(K, 1));
    Var signal = ad::matmul(ad::mul(g2, tape.constant(std::move(eye))), col_ones);
    Var interference = ad::sub(ad::matmul(g2, col_ones), signal);
    Var sinr = ad::mul(signal, ad::reciprocal(ad::add_scalar(interference, 1.0)));
    return ad::scale(ad::sum_all(ad::log(ad::add_scalar(sinr, 1.0))), 1.0 / std::numbers::ln2);
}

BeamformingNet BeamformingNet::create(ad::ParameterStore &store, const BeamformingConfig &cfg, Rng &rng,
                                      const std::string &prefix)
{
    cfg.validate();
    BeamformingNet net;
    net.cfg_ = cfg;
    net.init_edge_ = Mlp::create(store, prefix + "init_edge", 2, cfg.width, rng);
    for (std::size_t l = 0; l < cfg.layers; ++l)
        net.layers_.push_back(EngnnLayer::create(store, prefix + "layer" + std::to_string(l + 1), cfg.width, rng));
    net.head_ = Linear::create(store, prefix + "head", cfg.width, 2, rng);
    return net;
}

void BeamformingNet::head(Tape &tape, const ad::ParameterStore &store, const Eigen::MatrixXcd &h,
                          const std::vector<double> &noise, double p_max, Var &mu, Var &p) const
{
    const std::size_t M = static_cast<std::size_t>(h.rows()), K = static_cast<std::size_t>(h.cols());
    if (M < 1 || K < 1)
        throw Error(Errc::invalid_argument, "beamforming net: needs M >= 1 and K >= 1");
    if (noise.size() != K)
        throw Error(Errc::shape_mismatch, "beamforming net: noise length differs from user count");
    const double s = channel_feature_scale(noise, p_max);
    Tensor edge(Shape{M * K, 2});
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t k = 0; k < K; ++k) {
            const cdouble v = h(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) * s;
            edge.at(m * K + k, 0) = v.real();
            edge.at(m * K + k, 1) = v.imag();
        }
    const BipartiteIndex graph(M, K);
    EngnnState st;
    st.edge = init_edge_(tape, store, tape.constant(std::move(edge)));
    st.node = tape.constant(Tensor(Shape{M, cfg_.width}));
    st.user = tape.constant(Tensor(Shape{K, cfg_.width}));
    for (const auto &layer : layers_)
        st = layer(tape, store, st, graph);
    Var raw = ad::transpose(head_(tape, store, st.user));  // [2, K]
    mu = ad::scale(ad::softmax(ad::slice_rows(raw, 0, 1)), p_max);
    p = ad::scale(ad::softmax(ad::slice_rows(raw, 1, 1)), p_max);
}

BeamformingNet::Output BeamformingNet::forward(Tape &tape, const ad::ParameterStore &store,
                                               const Eigen::MatrixXcd &h, const std::vector<double> &noise,
                                               double p_max) const
{
    Output out;
    head(tape, store, h, noise, p_max, out.mu, out.p);
    out.w = structured_beamformer(tape, h, noise, out.mu, out.p);
    out.sum_rate = sum_rate(tape, h, noise, out.w);
    return out;
}

std::pair<StructuredBF, BeamformerSet> BeamformingNet::infer(const ad::ParameterStore &store,
                                                             const Eigen::MatrixXcd &h,
                                                             const std::vector<double> &noise, double p_max) const
{
    Tape tape(false);
    Var mu, p;
    head(tape, store, h, noise, p_max, mu, p);
    StructuredBF s;
    s.mu.assign(mu.value().values().begin(), mu.value().values().end());
    s.p.assign(p.value().values().begin(), p.value().values().end());
    BeamformerSet w = beamformer_from_structure(h, s.mu, s.p, noise);
    return {std::move(s), std::move(w)};
}

} // namespace maopt
