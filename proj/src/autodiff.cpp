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

#include "maopt/autodiff.hpp"
#include "maopt/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace maopt::ad {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

// Additive surrogate for -inf on masked logits.
constexpr double kMaskedLogit = -1e30;

ConstMap as_matrix(const Tensor &t) { return ConstMap(t.data(), t.rows(), t.cols()); }
MutMap as_matrix(Tensor &t) { return MutMap(t.data(), t.rows(), t.cols()); }

[[noreturn]] void shape_error(Op op, const Shape &a, const Shape &b)
{
    throw Error(Errc::shape_mismatch,
                std::string(op_name(op)) + ": shape mismatch " + shape_string(a) + " vs " + shape_string(b));
}

[[noreturn]] void shape_error(Op op, const Shape &a, const std::string &why)
{
    throw Error(Errc::shape_mismatch, std::string(op_name(op)) + ": " + why + " (got " + shape_string(a) + ")");
}

void require_rank2(Op op, const Tensor &t)
{
    if (t.rank() != 2)
        shape_error(op, t.shape(), "expected a rank-2 tensor");
}

Tape &tape_of(Var a, Op op)
{
    if (!a)
        throw Error(Errc::invalid_argument, std::string(op_name(op)) + ": empty variable");
    return *a.tape();
}

Tape &tape_of(Var a, Var b, Op op)
{
    Tape &t = tape_of(a, op);
    if (b.tape() != &t)
        throw Error(Errc::invalid_argument, std::string(op_name(op)) + ": operands live on different tapes");
    return t;
}

void add_into(Tensor &dst, const Tensor &src, double w = 1.0)
{
    auto d = dst.values();
    auto s = src.values();
    for (std::size_t i = 0; i < d.size(); ++i)
        d[i] += w * s[i];
}

// dydx(x, y) is the local derivative given input x and output y.
template <class F, class D>
Var unary(Op op, Var a, F f, D dydx)
{
    Tape &t = tape_of(a, op);
    const Tensor &x = t.value(a);
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i)
        y[i] = f(x[i]);
    const std::size_t ia = a.id();
    return t.record(op, std::move(y), {a}, [ia, dydx](Tape &tp, std::size_t self) {
        if (!tp.needs_grad(ia))
            return;
        const Tensor &x = tp.value(ia);
        const Tensor &y = tp.value(self);
        const Tensor &g = tp.grad_slot(self);
        Tensor &gx = tp.grad_slot(ia);
        for (std::size_t i = 0; i < x.size(); ++i)
            gx[i] += g[i] * dydx(x[i], y[i]);
    });
}

} // namespace

const char *op_name(Op op)
{
    switch (op) {
    case Op::constant: return "constant";
    case Op::parameter: return "parameter";
    case Op::matmul: return "matmul";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "elementwise-multiply";
    case Op::scale: return "scalar-scale";
    case Op::add_scalar: return "add-scalar";
    case Op::add_rowwise: return "add-rowwise";
    case Op::concat: return "concat-last-axis";
    case Op::gather_rows: return "gather-rows";
    case Op::slice_rows: return "slice-rows";
    case Op::mean_axis: return "mean-over-axis";
    case Op::sum_all: return "sum-all";
    case Op::relu: return "relu";
    case Op::tanh: return "tanh";
    case Op::exp: return "exp";
    case Op::reciprocal: return "reciprocal";
    case Op::log: return "log";
    case Op::sqrt: return "square-root";
    case Op::masked_softmax: return "masked-softmax";
    case Op::reshape: return "reshape";
    case Op::transpose: return "transpose";
    case Op::solve: return "solve";
    case Op::solve_spd: return "solve-spd";
    }
    return "unknown";
}

const Tensor &Var::value() const
{
    if (!tape_)
        throw Error(Errc::invalid_argument, "var: empty variable");
    return tape_->value(id_);
}

// ---- Tape -----------------------------------------------------------------

Var Tape::constant(Tensor value)
{
    Node n;
    n.op = Op::constant;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(const ParameterStore &store, std::size_t index)
{
    if (index >= store.size())
        throw Error(Errc::invalid_argument, "tape: parameter index out of range");
    auto key = std::make_pair(&store, index);
    if (auto it = param_nodes_.find(key); it != param_nodes_.end())
        return Var(this, it->second);
    Node n;
    n.op = Op::parameter;
    n.external = &store[index].value;
    n.needs_grad = record_;
    n.store = &store;
    n.param_index = index;
    nodes_.push_back(std::move(n));
    param_nodes_.emplace(key, nodes_.size() - 1);
    return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(const ParameterStore &store, const std::string &name)
{
    auto idx = store.find(name);
    if (!idx)
        throw Error(Errc::invalid_argument, "tape: no parameter named '" + name + "'");
    return parameter(store, *idx);
}

Var Tape::record(Op op, Tensor value, std::initializer_list<Var> inputs, BackwardFn fn)
{
    return record(op, std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(fn));
}

Var Tape::record(Op op, Tensor value, std::span<const Var> inputs, BackwardFn fn)
{
    Node n;
    n.op = op;
    n.value = std::move(value);
    if (record_) {
        for (const Var &v : inputs) {
            check_owner(v, op_name(op));
            n.needs_grad = n.needs_grad || nodes_[v.id()].needs_grad;
        }
        if (n.needs_grad)
            n.backward = std::move(fn);
    }
    nodes_.push_back(std::move(n));
    return Var(this, nodes_.size() - 1);
}

const Tensor &Tape::value(std::size_t id) const
{
    const Node &n = nodes_[id];
    return n.external ? *n.external : n.value;
}

Tensor &Tape::grad_slot(std::size_t id)
{
    Node &n = nodes_[id];
    if (!n.has_grad) {
        n.grad = Tensor(value(id).shape());
        n.has_grad = true;
    }
    return n.grad;
}

void Tape::check_owner(Var v, const char *what) const
{
    if (v.tape() != this || v.id() >= nodes_.size())
        throw Error(Errc::invalid_argument, std::string(what) + ": variable does not belong to this tape");
}

void Tape::backward(Var root)
{
    check_owner(root, "backward");
    if (!record_)
        throw Error(Errc::invalid_argument, "backward: tape was created without gradient recording");
    if (value(root.id()).size() != 1)
        throw Error(Errc::shape_mismatch,
                    "backward: root must be a scalar, got " + shape_string(value(root.id()).shape()));
    for (auto &n : nodes_) {
        n.has_grad = false;
        n.grad = Tensor();
    }
    if (!nodes_[root.id()].needs_grad)
        return;
    grad_slot(root.id())[0] = 1.0;
    for (std::size_t i = root.id() + 1; i-- > 0;) {
        Node &n = nodes_[i];
        if (n.has_grad && n.needs_grad && n.backward)
            n.backward(*this, i);
    }
}

Tensor Tape::grad(Var v) const
{
    check_owner(v, "grad");
    const Node &n = nodes_[v.id()];
    if (!n.has_grad)
        return Tensor(value(v.id()).shape());
    return n.grad;
}

void Tape::accumulate_into(ParameterStore &store, double weight) const
{
    for (const auto &[key, id] : param_nodes_) {
        if (key.first != &store || !nodes_[id].has_grad)
            continue;
        add_into(store[key.second].grad, nodes_[id].grad, weight);
    }
}

void Tape::accumulate_into(GradientBuffer &buffer, const ParameterStore &store, double weight) const
{
    for (const auto &[key, id] : param_nodes_) {
        if (key.first != &store || !nodes_[id].has_grad)
            continue;
        add_into(buffer[key.second], nodes_[id].grad, weight);
    }
}

void backward(Var root, ParameterStore &store)
{
    if (!root)
        throw Error(Errc::invalid_argument, "backward: empty root");
    root.tape()->backward(root);
    root.tape()->accumulate_into(store);
}

// ---- primitives -----------------------------------------------------------

Var matmul(Var a, Var b)
{
    Tape &t = tape_of(a, b, Op::matmul);
    const Tensor &x = t.value(a);
    const Tensor &y = t.value(b);
    require_rank2(Op::matmul, x);
    require_rank2(Op::matmul, y);
    if (x.cols() != y.rows())
        shape_error(Op::matmul, x.shape(), y.shape());
    Tensor out(Shape{x.rows(), y.cols()});
    as_matrix(out).noalias() = as_matrix(x) * as_matrix(y);
    const std::size_t ia = a.id(), ib = b.id();
    return t.record(Op::matmul, std::move(out), {a, b}, [ia, ib](Tape &tp, std::size_t self) {
        const Tensor &g = tp.grad_slot(self);
        if (tp.needs_grad(ia))
            as_matrix(tp.grad_slot(ia)).noalias() += as_matrix(g) * as_matrix(tp.value(ib)).transpose();
        if (tp.needs_grad(ib))
            as_matrix(tp.grad_slot(ib)).noalias() += as_matrix(tp.value(ia)).transpose() * as_matrix(g);
    });
}

namespace {

Var binary_same_shape(Op op, Var a, Var b, double sign_b)
{
    Tape &t = tape_of(a, b, op);
    const Tensor &x = t.value(a);
    const Tensor &y = t.value(b);
    if (x.shape() != y.shape())
        shape_error(op, x.shape(), y.shape());
    Tensor out(x.shape());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = x[i] + sign_b * y[i];
    const std::size_t ia = a.id(), ib = b.id();
    return t.record(op, std::move(out), {a, b}, [ia, ib, sign_b](Tape &tp, std::size_t self) {
        const Tensor &g = tp.grad_slot(self);
        if (tp.needs_grad(ia))
            add_into(tp.grad_slot(ia), g);
        if (tp.needs_grad(ib))
            add_into(tp.grad_slot(ib), g, sign_b);
    });
}

} // namespace

Var add(Var a, Var b) { return binary_same_shape(Op::add, a, b, 1.0); }
Var sub(Var a, Var b) { return binary_same_shape(Op::sub, a, b, -1.0); }

Var mul(Var a, Var b)
{
    Tape &t = tape_of(a, b, Op::mul);
    const Tensor &x = t.value(a);
    const Tensor &y = t.value(b);
    if (x.shape() != y.shape())
        shape_error(Op::mul, x.shape(), y.shape());
    Tensor out(x.shape());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = x[i] * y[i];
    const std::size_t ia = a.id(), ib = b.id();
    return t.record(Op::mul, std::move(out), {a, b}, [ia, ib](Tape &tp, std::size_t self) {
        const Tensor &g = tp.grad_slot(self);
        if (tp.needs_grad(ia)) {
            const Tensor &y = tp.value(ib);
            Tensor &gx = tp.grad_slot(ia);
            for (std::size_t i = 0; i < g.size(); ++i)
                gx[i] += g[i] * y[i];
        }
        if (tp.needs_grad(ib)) {
            const Tensor &x = tp.value(ia);
            Tensor &gy = tp.grad_slot(ib);
            for (std::size_t i = 0; i < g.size(); ++i)
                gy[i] += g[i] * x[i];
        }
    });
}

Var scale(Var a, double s)
{
    Tape &t = tape_of(a, Op::scale);
    Tensor out = t.value(a);
    for (double &v : out.values())
        v *= s;
    const std::size_t ia = a.id();
    return t.record(Op::scale, std::move(out), {a}, [ia, s](Tape &tp, std::size_t self) {
        add_into(tp.grad_slot(ia), tp.grad_slot(self), s);
    });
}

Var add_scalar(Var a, double s)
{
    Tape &t = tape_of(a, Op::add_scalar);
    Tensor out = t.value(a);
    for (double &v : out.values())
        v += s;
    const std::size_t ia = a.id();
    return t.record(Op::add_scalar, std::move(out), {a}, [ia](Tape &tp, std::size_t self) {
        add_into(tp.grad_slot(ia), tp.grad_slot(self));
    });
}

Var add_rowwise(Var a, Var row)
{
    Tape &t = tape_of(a, row, Op::add_rowwise);
    const Tensor &x = t.value(a);
    const Tensor &b = t.value(row);
    require_rank2(Op::add_rowwise, x);
    if (b.size() != x.cols())
        shape_error(Op::add_rowwise, x.shape(), b.shape());
    Tensor out = x;
    const std::size_t n = x.cols();
    for (std::size_t r = 0; r < x.rows(); ++r)
        for (std::size_t c = 0; c < n; ++c)
            out[r * n + c] += b[c];
    const std::size_t ia = a.id(), ib = row.id();
    return t.record(Op::add_rowwise, std::move(out), {a, row}, [ia, ib, n](Tape &tp, std::size_t self) {
        const Tensor &g = tp.grad_slot(self);
        if (tp.needs_grad(ia))
            add_into(tp.grad_slot(ia), g);
        if (tp.needs_grad(ib)) {
            Tensor &gb = tp.grad_slot(ib);
            const std::size_t rows = g.size() / n;
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < n; ++c)
                    gb[c] += g[r * n + c];
        }
    });
}

Var concat(std::initializer_list<Var> parts) { return concat(std::span<const Var>(parts.begin(), parts.size())); }

Var concat(std::span<const Var> parts)
{
    if (parts.empty())
        throw Error(Errc::invalid_argument, "concat-last-axis: no inputs");
    Tape &t = tape_of(parts[0], Op::concat);
    const std::size_t rows = t.value(parts[0]).rows();
    std::vector<std::size_t> ids, widths;
    std::size_t total = 0;
    for (const Var &p : parts) {
        tape_of(parts[0], p, Op::concat);
        const Tensor &x = t.value(p);
        require_rank2(Op::concat, x);
        if (x.rows() != rows)
            shape_error(Op::concat, t.value(parts[0]).shape(), x.shape());
        ids.push_back(p.id());
        widths.push_back(x.cols());
        total += x.cols();
    }
    Tensor out(Shape{rows, total});
    std::size_t offset = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
        const Tensor &x = t.value(ids[k]);
        for (std::size_t r = 0; r < rows; ++r)
            std::copy_n(x.data() + r * widths[k], widths[k], out.data() + r * total + offset);
        offset += widths[k];
    }
    return t.record(Op::concat, std::move(out), parts, [ids, widths, rows, total](Tape &tp, std::size_t self) {
        const Tensor &g = tp.grad_slot(self);
        std::size_t off = 0;
        for (std::size_t k = 0; k < ids.size(); ++k) {
            if (tp.needs_grad(ids[k])) {
                Tensor &gx = tp.grad_slot(ids[k]);
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < widths[k]; ++c)
                        gx[r * widths[k] + c] += g[r * total + off + c];
            }
            off += widths[k];
        }
    });
}

Var gather_rows(Var a, std::span<const std::size_t> index)
{
    Tape &t = tape_of(a, Op::gather_rows);
    const Tensor &x = t.value(a);
    if (x.rank() == 0)
        shape_error(Op::gather_rows, x.shape(), "cannot gather from a scalar");
    const std::size_t m = x.shape()[0];
    const std::size_t inner = x.size() / std::max<std::size_t>(m, 1);
    Shape shape = x.shape();
    shape[0] = index.size();
    Tensor out(shape);
    for (std::size_t r = 0; r < index.size(); ++r) {
        if (index[r] >= m)
            throw Error(Errc::shape_mismatch, "gather-rows: index " + std::to_string(index[r]) +
                                                  " out of range for shape " + shape_string(x.shape()));
        std::copy_n(x.data() + index[r] * inner, inner, out.data() + r * inner);
    }
    const std::size_t ia = a.id();
    std::vector<std::size_t> idx(index.begin(), index.end());
    return t.record(Op::gather_rows, std::move(out), {a}, [ia, idx = std::move(idx), inner](Tape &tp, std::size_t self) {
        const Tensor &g = tp.grad_slot(self);
        Tensor &gx = tp.grad_slot(ia);
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::size_t c = 0; c < inner; ++c)
                gx[idx[r] * inner + c] += g[r * inner + c];
    });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count)
{
    Tape &t = tape_of(a, Op::slice_rows);
    const Tensor &x = t.value(a);
    require_rank2(Op::slice_rows, x);
    if (begin + count > x.rows())
        shape_error(Op::slice_rows, x.shape(),
                    "rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) + ") out of range");
    const std::size_t n = x.cols();
    Tensor out(Shape{count, n});
    std::copy_n(x.data() + begin * n, count * n, out.data());
    const std::size_t ia = a.id();
    return t.record(Op::slice_rows, std::move(out), {a}, [ia, begin, count, n](Tape &tp, std::size_t self) {
        const Tensor &g = tp.grad_slot(self);
        Tensor &gx = tp.grad_slot(ia);
        for (std::size_t i = 0; i < count * n; ++i)
            gx[begin * n + i] += g[i];
    });
}

Var mean_axis(Var a, std::size_t axis)
{
    Tape &t = tape_of(a, Op::mean_axis);
    const Tensor &x = t.value(a);
    if (axis >= x.rank())
        shape_error(Op::mean_axis, x.shape(), "axis " + std::to_string(axis) + " out of range");
    const Shape &s = x.shape();
    const std::size_t len = s[axis];
    if (len == 0)
        shape_error(Op::mean_axis, s, "mean over an empty axis");
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i)
        outer *= s[i];
    for (std::size_t i = axis + 1; i < s.size(); ++i)
        inner *= s[i];
    Shape out_shape;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (i != axis)
            out_shape.push_back(s[i]);
    Tensor out(out_shape);
    const double inv = 1.0 / static_cast<double>(len);
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t l = 0; l < len; ++l)
            for (std::size_t i = 0; i < inner; ++i)
                out[o * inner + i] += x[(o * len + l) * inner + i];
    for (double &v : out.values())
        v *= inv;
    const std::size_t ia = a.id();
    return t.record(Op::mean_axis, std::move(out), {a}, [ia, outer, len, inner, inv](Tape &tp, std::size_t self) {
        const Tensor &g = tp.grad_slot(self);
        Tensor &gx = tp.grad_slot(ia);
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t l = 0; l < len; ++l)
                for (std::size_t i = 0; i < inner; ++i)
                    gx[(o * len + l) * inner + i] += g[o * inner + i] * inv;
    });
}

Var sum_all(Var a)
{
    Tape &t = tape_of(a, Op::sum_all);
    double s = 0.0;
    for (double v : t.value(a).values())
        s += v;
    const std::size_t ia = a.id();
    return t.record(Op::sum_all, Tensor::scalar(s), {a}, [ia](Tape &tp, std::size_t self) {
        const double g = tp.grad_slot(self)[0];
        for (double &v : tp.grad_slot(ia).values())
            v += g;
    });
}

Var relu(Var a)
{
    return unary(Op::relu, a, [](double x) { return x > 0.0 ? x : 0.0; },
                 [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var tanh(Var a)
{
    return unary(Op::tanh, a, [](double x) { return std::tanh(x); },
                 [](double, double y) { return 1.0 - y * y; });
}

Var exp(Var a)
{
    return unary(Op::exp, a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var reciprocal(Var a)
{
    for (double v : a.value().values())
        if (v == 0.0)
            throw Error(Errc::numeric, "reciprocal: division by zero");
    return unary(Op::reciprocal, a, [](double x) { return 1.0 / x; }, [](double, double y) { return -y * y; });
}

Var log(Var a)
{
    for (double v : a.value().values())
        if (!(v > 0.0))
            throw Error(Errc::numeric, "log: non-positive argument " + std::to_string(v));
    return unary(Op::log, a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Var sqrt(Var a)
{
    for (double v : a.value().values())
        if (!(v > 0.0))
            throw Error(Errc::numeric, "square-root: non-positive argument " + std::to_string(v));
    return unary(Op::sqrt, a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Var masked_softmax(Var logits, const std::vector<bool> &mask)
{
    Tape &t = tape_of(logits, Op::masked_softmax);
    const Tensor &x = t.value(logits);
    if (mask.size() != x.size())
        throw Error(Errc::shape_mismatch, "masked-softmax: mask length " + std::to_string(mask.size()) +
                                              " vs logits " + shape_string(x.shape()));
    if (std::none_of(mask.begin(), mask.end(), [](bool b) { return b; }))
        throw NoFeasibleChoice();

    Tensor out(x.shape());
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = mask[i] ? x[i] : x[i] + kMaskedLogit;
        peak = std::max(peak, out[i]);
    }
    double total = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = std::exp(out[i] - peak);
        total += out[i];
    }
    for (std::size_t i = 0; i < x.size(); ++i)
        out[i] = mask[i] ? out[i] / total : 0.0;

    const std::size_t ia = logits.id();
    return t.record(Op::masked_softmax, std::move(out), {logits}, [ia](Tape &tp, std::size_t self) {
        const Tensor &y = tp.value(self);
        const Tensor &g = tp.grad_slot(self);
        double dot = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i)
            dot += g[i] * y[i];
        Tensor &gx = tp.grad_slot(ia);
        for (std::size_t i = 0; i < y.size(); ++i)
            gx[i] += y[i] * (g[i] - dot);
    });
}

Var softmax(Var logits) { return masked_softmax(logits, std::vector<bool>(logits.value().size(), true)); }

Var reshape(Var a, Shape shape)
{
    Tape &t = tape_of(a, Op::reshape);
    Tensor out = t.value(a);
    if (shape_size(shape) != out.size())
        shape_error(Op::reshape, out.shape(), "cannot reshape to " + shape_string(shape));
    out.reshape(std::move(shape));
    const std::size_t ia = a.id();
    return t.record(Op::reshape, std::move(out), {a}, [ia](Tape &tp, std::size_t self) {
        add_into(tp.grad_slot(ia), tp.grad_slot(self));
    });
}

Var transpose(Var a)
{
    Tape &t = tape_of(a, Op::transpose);
    const Tensor &x = t.value(a);
    require_rank2(Op::transpose, x);
    Tensor out(Shape{x.cols(), x.rows()});
    as_matrix(out) = as_matrix(x).transpose();
    const std::size_t ia = a.id();
    return t.record(Op::transpose, std::move(out), {a}, [ia](Tape &tp, std::size_t self) {
        as_matrix(tp.grad_slot(ia)) += as_matrix(tp.grad_slot(self)).transpose();
    });
}

namespace {

void check_solve_shapes(Op op, const Tensor &a, const Tensor &b)
{
    require_rank2(op, a);
    require_rank2(op, b);
    if (a.rows() != a.cols())
        shape_error(op, a.shape(), "coefficient matrix must be square");
    if (b.rows() != a.rows())
        shape_error(op, a.shape(), b.shape());
}

} // namespace

Var solve(Var a, Var b)
{
    Tape &t = tape_of(a, b, Op::solve);
    const Tensor &A = t.value(a);
    const Tensor &B = t.value(b);
    check_solve_shapes(Op::solve, A, B);
    Eigen::PartialPivLU<RowMat> lu(as_matrix(A));
    if (!(lu.rcond() > 1e-14))
        throw Error(Errc::numeric, "solve: singular system");
    Tensor X(B.shape());
    as_matrix(X) = lu.solve(as_matrix(B));
    const std::size_t ia = a.id(), ib = b.id();
    return t.record(Op::solve, std::move(X), {a, b}, [ia, ib](Tape &tp, std::size_t self) {
        const Tensor &g = tp.grad_slot(self);
        Eigen::PartialPivLU<RowMat> lut(as_matrix(tp.value(ia)).transpose());
        RowMat gb = lut.solve(as_matrix(g));
        if (tp.needs_grad(ib))
            as_matrix(tp.grad_slot(ib)) += gb;
        if (tp.needs_grad(ia))
            as_matrix(tp.grad_slot(ia)).noalias() -= gb * as_matrix(tp.value(self)).transpose();
    });
}

Var solve_spd(Var a, Var b)
{
    Tape &t = tape_of(a, b, Op::solve_spd);
    const Tensor &A = t.value(a);
    const Tensor &B = t.value(b);
    check_solve_shapes(Op::solve_spd, A, B);
    Eigen::LLT<RowMat> llt(as_matrix(A));
    if (llt.info() != Eigen::Success)
        throw Error(Errc::numeric, "solve-spd: matrix is not positive definite");
    Tensor X(B.shape());
    as_matrix(X) = llt.solve(as_matrix(B));
    const std::size_t ia = a.id(), ib = b.id();
    // The gradient w.r.t. `a` is the unconstrained one, -A^{-T} G X^T; it is
    // exact along any symmetric perturbation of `a`.
    return t.record(Op::solve_spd, std::move(X), {a, b}, [ia, ib](Tape &tp, std::size_t self) {
        const Tensor &g = tp.grad_slot(self);
        Eigen::LLT<RowMat> llt(as_matrix(tp.value(ia)));
        RowMat gb = llt.solve(as_matrix(g));
        if (tp.needs_grad(ib))
            as_matrix(tp.grad_slot(ib)) += gb;
        if (tp.needs_grad(ia))
            as_matrix(tp.grad_slot(ia)).noalias() -= gb * as_matrix(tp.value(self)).transpose();
    });
}

Var apply_primitive(Op op, std::span<const Var> inputs)
{
    auto need = [&](std::size_t n) {
        if (inputs.size() != n)
            throw Error(Errc::invalid_argument, std::string(op_name(op)) + ": expected " + std::to_string(n) +
                                                    " inputs, got " + std::to_string(inputs.size()));
    };
    switch (op) {
    case Op::matmul: need(2); return matmul(inputs[0], inputs[1]);
    case Op::add: need(2); return add(inputs[0], inputs[1]);
    case Op::sub: need(2); return sub(inputs[0], inputs[1]);
    case Op::mul: need(2); return mul(inputs[0], inputs[1]);
    case Op::add_rowwise: need(2); return add_rowwise(inputs[0], inputs[1]);
    case Op::concat: return concat(inputs);
    case Op::sum_all: need(1); return sum_all(inputs[0]);
    case Op::relu: need(1); return relu(inputs[0]);
    case Op::tanh: need(1); return tanh(inputs[0]);
    case Op::exp: need(1); return exp(inputs[0]);
    case Op::reciprocal: need(1); return reciprocal(inputs[0]);
    case Op::log: need(1); return log(inputs[0]);
    case Op::sqrt: need(1); return sqrt(inputs[0]);
    case Op::transpose: need(1); return transpose(inputs[0]);
    case Op::solve: need(2); return solve(inputs[0], inputs[1]);
    case Op::solve_spd: need(2); return solve_spd(inputs[0], inputs[1]);
    default:
        throw Error(Errc::invalid_argument,
                    std::string("apply_primitive: ") + op_name(op) + " needs extra arguments; call it directly");
    }
}

} // namespace maopt::ad
