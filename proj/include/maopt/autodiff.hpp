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

#ifndef MAOPT_AUTODIFF_HPP
#define MAOPT_AUTODIFF_HPP

#include "maopt/parameters.hpp"
#include "maopt/tensor.hpp"

#include <cstdint>
#include <deque>
#include <functional>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

// Reverse-mode automatic differentiation over dense float64 tensors.
//
// A Tape records every primitive applied during one forward pass; the graph is
// acyclic and topologically ordered by construction. backward() walks it once
// in reverse. Tapes are single-threaded and disposable: build one per forward
// pass. Several tapes may read the same ParameterStore concurrently as long as
// nobody writes to it.

namespace maopt::ad {

enum class Op : std::uint8_t {
    constant,
    parameter,
    matmul,
    add,
    sub,
    mul,
    scale,
    add_scalar,
    add_rowwise,
    concat,
    gather_rows,
    slice_rows,
    mean_axis,
    sum_all,
    relu,
    tanh,
    exp,
    reciprocal,
    log,
    sqrt,
    masked_softmax,
    reshape,
    transpose,
    solve,
    solve_spd,
};

const char *op_name(Op op);

class Tape;

class Var {
public:
    Var() = default;

    const Tensor &value() const;
    const Shape &shape() const { return value().shape(); }
    Tape *tape() const noexcept { return tape_; }
    std::size_t id() const noexcept { return id_; }
    explicit operator bool() const noexcept { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape *tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape *tape_ = nullptr;
    std::size_t id_ = 0;
};

class Tape {
public:
    using BackwardFn = std::function<void(Tape &, std::size_t self)>;

    // With record_gradients = false only forward values are kept (inference).
    explicit Tape(bool record_gradients = true) : record_(record_gradients) {}
    Tape(const Tape &) = delete;
    Tape &operator=(const Tape &) = delete;

    bool recording() const noexcept { return record_; }
    std::size_t size() const noexcept { return nodes_.size(); }

    Var constant(Tensor value);
    // Leaf bound to store[index]; repeated requests return the same node.
    Var parameter(const ParameterStore &store, std::size_t index);
    Var parameter(const ParameterStore &store, const std::string &name);

    // Seeds d(root)/d(root) = 1 and propagates. Root must hold one element.
    // Node gradients from an earlier call are cleared first.
    void backward(Var root);

    // Gradient of the last backward() root w.r.t. v (zeros if unreached).
    Tensor grad(Var v) const;

    // Adds weight * d(root)/d(param) for every leaf bound to `store`.
    void accumulate_into(ParameterStore &store, double weight = 1.0) const;
    void accumulate_into(GradientBuffer &buffer, const ParameterStore &store, double weight = 1.0) const;

    // --- primitive implementer interface -------------------------------
    Var record(Op op, Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);
    Var record(Op op, Tensor value, std::span<const Var> inputs, BackwardFn fn);
    const Tensor &value(std::size_t id) const;
    const Tensor &value(Var v) const { return value(v.id()); }
    bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
    // Mutable gradient slot, zero-initialised on first touch.
    Tensor &grad_slot(std::size_t id);

private:
    struct Node {
        Op op = Op::constant;
        Tensor value;
        const Tensor *external = nullptr; // parameter leaves alias the store
        Tensor grad;
        bool has_grad = false;
        bool needs_grad = false;
        BackwardFn backward;
        const ParameterStore *store = nullptr;
        std::size_t param_index = 0;
    };

    void check_owner(Var v, const char *what) const;

    std::deque<Node> nodes_;
    std::map<std::pair<const ParameterStore *, std::size_t>, std::size_t> param_nodes_;
    bool record_;
};

// ---- primitives ---------------------------------------------------------
// Shapes are checked eagerly; violations throw Error(shape_mismatch) naming
// the primitive and both shapes.

Var matmul(Var a, Var b);                 // [m,k] x [k,n]
Var add(Var a, Var b);                    // same shape
Var sub(Var a, Var b);                    // same shape
Var mul(Var a, Var b);                    // elementwise, same shape
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var add_rowwise(Var a, Var row);          // [m,n] + [n] broadcast over rows
Var concat(std::span<const Var> parts);   // along the last axis of rank-2 inputs
Var concat(std::initializer_list<Var> parts);
Var gather_rows(Var a, std::span<const std::size_t> index);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
Var mean_axis(Var a, std::size_t axis);   // removes `axis`
Var sum_all(Var a);                       // rank-0 result
Var relu(Var a);
Var tanh(Var a);
Var exp(Var a);
Var reciprocal(Var a);
Var log(Var a);
Var sqrt(Var a);
Var reshape(Var a, Shape shape);
Var transpose(Var a);
Var solve(Var a, Var b);                  // a^{-1} b via LU; a square
Var solve_spd(Var a, Var b);              // a symmetric positive definite (Cholesky)

// Softmax over all elements with masked entries excluded. Masked outputs are
// exactly zero. Throws NoFeasibleChoice when every entry is masked.
Var masked_softmax(Var logits, const std::vector<bool> &mask);
Var softmax(Var logits);

// Generic dispatch for the unary/binary primitives listed above (used by
// gradient-check sweeps). Ops needing extra arguments are rejected.
Var apply_primitive(Op op, std::span<const Var> inputs);

// backward(root) followed by accumulation into `store`; repeated calls add up.
void backward(Var root, ParameterStore &store);

} // namespace maopt::ad

#endif
