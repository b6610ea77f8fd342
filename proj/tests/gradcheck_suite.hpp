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

#ifndef MAOPT_GRADCHECK_SUITE_HPP
#define MAOPT_GRADCHECK_SUITE_HPP

#include "test_util.hpp"

#include <string>
#include <vector>

namespace maopt::test {

struct PrimitiveCheck {
    std::string name;
    GradCheck result;
};

// Every differentiable primitive against central differences. Inputs are
// kept away from kinks (relu) and domain edges (log, sqrt, reciprocal).
inline std::vector<PrimitiveCheck> primitive_gradient_checks(std::uint64_t seed = 5)
{
    using ad::Shape;
    using ad::Tape;
    using ad::Tensor;
    using ad::Var;
    Rng rng(seed);
    std::vector<PrimitiveCheck> out;

    // Scalar loss: sum(out .* C) with a fixed random C.
    auto weighted = [](Tape &tape, Var y, std::uint64_t s) {
        Rng r(s);
        return ad::sum_all(ad::mul(y, tape.constant(random_tensor(y.shape(), r))));
    };
    auto run = [&](const std::string &name, std::vector<Tensor> xs,
                   const std::function<Var(Tape &, const std::vector<Var> &)> &f) {
        const std::uint64_t s = rng.next();
        out.push_back({name, check_gradients(std::move(xs), [&](Tape &t, const std::vector<Var> &v) {
                           return weighted(t, f(t, v), s);
                       })});
    };
    auto away_from_zero = [&](Shape shape) {
        Tensor t = random_tensor(std::move(shape), rng, 0.1, 1.0);
        for (double &v : t.values())
            v = rng.uniform() < 0.5 ? -v : v;
        return t;
    };

    run("matmul", {random_tensor({3, 4}, rng), random_tensor({4, 2}, rng)},
        [](Tape &, const std::vector<Var> &v) { return ad::matmul(v[0], v[1]); });
    run("add", {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)},
        [](Tape &, const std::vector<Var> &v) { return ad::add(v[0], v[1]); });
    run("sub", {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)},
        [](Tape &, const std::vector<Var> &v) { return ad::sub(v[0], v[1]); });
    run("mul", {random_tensor({3, 4}, rng), random_tensor({3, 4}, rng)},
        [](Tape &, const std::vector<Var> &v) { return ad::mul(v[0], v[1]); });
    run("scale", {random_tensor({3, 4}, rng)}, [](Tape &, const std::vector<Var> &v) { return ad::scale(v[0], -1.7); });
    run("add_scalar", {random_tensor({3, 4}, rng)},
        [](Tape &, const std::vector<Var> &v) { return ad::mul(ad::add_scalar(v[0], 0.3), v[0]); });
    run("add_rowwise", {random_tensor({3, 4}, rng), random_tensor({4}, rng)},
        [](Tape &, const std::vector<Var> &v) { return ad::add_rowwise(v[0], v[1]); });
    run("concat", {random_tensor({3, 2}, rng), random_tensor({3, 3}, rng)},
        [](Tape &, const std::vector<Var> &v) { return ad::concat({v[0], v[1]}); });
    run("gather_rows", {random_tensor({4, 3}, rng)}, [](Tape &, const std::vector<Var> &v) {
        const std::size_t idx[] = {2, 0, 2, 3};
        return ad::gather_rows(v[0], idx);
    });
    run("slice_rows", {random_tensor({5, 3}, rng)},
        [](Tape &, const std::vector<Var> &v) { return ad::slice_rows(v[0], 1, 3); });
    for (std::size_t axis = 0; axis < 3; ++axis)
        run("mean_axis/" + std::to_string(axis), {random_tensor({2, 3, 4}, rng)},
            [axis](Tape &, const std::vector<Var> &v) { return ad::mean_axis(v[0], axis); });
    run("sum_all", {random_tensor({3, 4}, rng)}, [](Tape &, const std::vector<Var> &v) {
        return ad::mul(ad::reshape(ad::sum_all(v[0]), Shape{1}), ad::reshape(ad::sum_all(v[0]), Shape{1}));
    });
    run("relu", {away_from_zero({3, 4})}, [](Tape &, const std::vector<Var> &v) { return ad::relu(v[0]); });
    run("tanh", {random_tensor({3, 4}, rng, -2.0, 2.0)},
        [](Tape &, const std::vector<Var> &v) { return ad::tanh(v[0]); });
    run("exp", {random_tensor({3, 4}, rng)}, [](Tape &, const std::vector<Var> &v) { return ad::exp(v[0]); });
    run("reciprocal", {random_tensor({3, 4}, rng, 0.5, 2.0)},
        [](Tape &, const std::vector<Var> &v) { return ad::reciprocal(v[0]); });
    run("log", {random_tensor({3, 4}, rng, 0.5, 2.0)}, [](Tape &, const std::vector<Var> &v) { return ad::log(v[0]); });
    run("sqrt", {random_tensor({3, 4}, rng, 0.5, 2.0)},
        [](Tape &, const std::vector<Var> &v) { return ad::sqrt(v[0]); });
    run("masked_softmax", {random_tensor({1, 6}, rng, -2.0, 2.0)}, [](Tape &, const std::vector<Var> &v) {
        return ad::masked_softmax(v[0], {true, false, true, true, false, true});
    });
    run("reshape", {random_tensor({2, 6}, rng)},
        [](Tape &, const std::vector<Var> &v) { return ad::reshape(v[0], Shape{3, 4}); });
    run("transpose", {random_tensor({3, 4}, rng)},
        [](Tape &, const std::vector<Var> &v) { return ad::transpose(v[0]); });
    run("solve", {random_tensor({4, 4}, rng), random_tensor({4, 2}, rng)}, [](Tape &t, const std::vector<Var> &v) {
        Tensor shift({4, 4});
        for (std::size_t i = 0; i < 4; ++i)
            shift.at(i, i) = 4.0;
        return ad::solve(ad::add(v[0], t.constant(shift)), v[1]);
    });
    // The SPD matrix is built as X X^T + I so perturbations stay symmetric.
    run("solve_spd", {random_tensor({4, 4}, rng), random_tensor({4, 2}, rng)},
        [](Tape &t, const std::vector<Var> &v) {
            Tensor eye({4, 4});
            for (std::size_t i = 0; i < 4; ++i)
                eye.at(i, i) = 1.0;
            Var a = ad::add(ad::matmul(v[0], ad::transpose(v[0])), t.constant(eye));
            return ad::solve_spd(a, v[1]);
        });
    return out;
}

} // namespace maopt::test

#endif
