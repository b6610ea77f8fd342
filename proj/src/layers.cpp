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

#include "maopt/layers.hpp"
#include "maopt/error.hpp"

#include <cmath>

namespace maopt {

using ad::Shape;
using ad::Tape;
using ad::Tensor;
using ad::Var;

Tensor uniform_init(Shape shape, std::size_t fan_in, Rng &rng)
{
    Tensor t(std::move(shape));
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double &v : t.values())
        v = bound * (2.0 * rng.uniform() - 1.0);
    return t;
}

Linear Linear::create(ad::ParameterStore &store, const std::string &name, std::size_t in, std::size_t out, Rng &rng)
{
    Linear l;
    l.in = in;
    l.out = out;
    l.weight = store.add(name + ".w", uniform_init(Shape{in, out}, in, rng));
    l.bias = store.add(name + ".b", uniform_init(Shape{out}, in, rng));
    return l;
}

Var Linear::operator()(Tape &tape, const ad::ParameterStore &store, Var x) const
{
    return ad::add_rowwise(ad::matmul(x, tape.parameter(store, weight)), tape.parameter(store, bias));
}

Mlp Mlp::create(ad::ParameterStore &store, const std::string &name, std::size_t in, std::size_t out, Rng &rng)
{
    Mlp m;
    m.first = Linear::create(store, name + ".l1", in, out, rng);
    m.second = Linear::create(store, name + ".l2", out, out, rng);
    return m;
}

Var Mlp::operator()(Tape &tape, const ad::ParameterStore &store, Var x) const
{
    return ad::relu(second(tape, store, ad::relu(first(tape, store, x))));
}

Var Mlp::partial(Tape &tape, const ad::ParameterStore &store, std::span<const MlpPart> parts,
                 std::size_t offset) const
{
    Var w = tape.parameter(store, first.weight);
    Var sum;
    for (const MlpPart &p : parts) {
        const std::size_t width = p.x.value().cols();
        if (offset + width > first.in)
            throw Error(Errc::shape_mismatch, "mlp: concatenated input wider than " + std::to_string(first.in));
        Var y = ad::matmul(p.x, ad::slice_rows(w, offset, width));
        if (!p.rows.empty())
            y = ad::gather_rows(y, p.rows);
        sum = sum ? ad::add(sum, y) : y;
        offset += width;
    }
    return sum;
}

Var Mlp::finish(Tape &tape, const ad::ParameterStore &store, Var pre_activation) const
{
    Var h = ad::relu(ad::add_rowwise(pre_activation, tape.parameter(store, first.bias)));
    return ad::relu(second(tape, store, h));
}

Var Mlp::operator()(Tape &tape, const ad::ParameterStore &store, std::span<const MlpPart> parts) const
{
    std::size_t width = 0;
    for (const MlpPart &p : parts)
        width += p.x.value().cols();
    if (width != first.in)
        throw Error(Errc::shape_mismatch, "mlp: input width " + std::to_string(width) + " vs expected " +
                                              std::to_string(first.in));
    return finish(tape, store, partial(tape, store, parts, 0));
}

Var Mlp::operator()(Tape &tape, const ad::ParameterStore &store, std::initializer_list<MlpPart> parts) const
{
    return (*this)(tape, store, std::span<const MlpPart>(parts.begin(), parts.size()));
}

BipartiteIndex::BipartiteIndex(std::size_t left_, std::size_t right_) : left(left_), right(right_)
{
    left_of_edge.resize(left * right);
    right_of_edge.resize(left * right);
    for (std::size_t n = 0; n < left; ++n)
        for (std::size_t k = 0; k < right; ++k) {
            left_of_edge[n * right + k] = n;
            right_of_edge[n * right + k] = k;
        }
}

Var mean_over_left(Var edges, const BipartiteIndex &g)
{
    const std::size_t d = edges.value().cols();
    return ad::mean_axis(ad::reshape(edges, Shape{g.left, g.right, d}), 0);
}

Var mean_over_right(Var edges, const BipartiteIndex &g)
{
    const std::size_t d = edges.value().cols();
    return ad::mean_axis(ad::reshape(edges, Shape{g.left, g.right, d}), 1);
}

EngnnLayer EngnnLayer::create(ad::ParameterStore &store, const std::string &name, std::size_t width, Rng &rng)
{
    EngnnLayer l;
    for (int i = 0; i < 7; ++i) {
        const std::size_t in = (i == 6 ? 3 : 2) * width;
        l.mlp[i] = Mlp::create(store, name + ".mlp" + std::to_string(i + 1), in, width, rng);
    }
    return l;
}

EngnnState EngnnLayer::operator()(Tape &tape, const ad::ParameterStore &store, const EngnnState &s,
                                  const BipartiteIndex &g) const
{
    const auto &by_n = g.left_of_edge;
    const auto &by_k = g.right_of_edge;

    Var m1 = mlp[0](tape, store, {{s.node, by_n}, {s.edge}});
    Var user = mlp[1](tape, store, {{s.user}, {mean_over_left(m1, g)}});

    Var m3 = mlp[2](tape, store, {{s.user, by_k}, {s.edge}});
    Var node = mlp[3](tape, store, {{s.node}, {mean_over_right(m3, g)}});

    Var m5 = mlp[4](tape, store, {{s.edge}, {s.user, by_k}});
    Var m6 = mlp[5](tape, store, {{s.edge}, {s.node, by_n}});
    Var edge = mlp[6](tape, store, {{s.edge}, {mean_over_left(m5, g), by_k}, {mean_over_right(m6, g), by_n}});
    return {user, node, edge};
}

} // namespace maopt
