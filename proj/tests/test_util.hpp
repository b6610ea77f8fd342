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

#ifndef MAOPT_TEST_UTIL_HPP
#define MAOPT_TEST_UTIL_HPP

#include "maopt/autodiff.hpp"
#include "maopt/channel.hpp"
#include "maopt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

namespace maopt::test {

inline ad::Tensor random_tensor(ad::Shape shape, Rng &rng, double lo = -1.0, double hi = 1.0)
{
    ad::Tensor t(std::move(shape));
    for (double &v : t.values())
        v = lo + (hi - lo) * rng.uniform();
    return t;
}

inline Eigen::MatrixXcd random_complex(Eigen::Index rows, Eigen::Index cols, Rng &rng, double sd = 1.0)
{
    Eigen::MatrixXcd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            m(i, j) = cdouble(sd * rng.normal(), sd * rng.normal());
    return m;
}

// Error of an analytic derivative against a central difference, relative to
// the larger magnitude with a floor so near-zero entries compare absolutely.
inline double fd_error(double analytic, double numeric, double floor = 1e-4)
{
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct GradCheck {
    double worst = 0.0;
    std::string where;
    std::size_t checked = 0;
};

// Same check against every weight of a parameter store.
inline GradCheck check_parameter_gradients(ad::ParameterStore &store,
                                           const std::function<ad::Var(ad::Tape &)> &build, double step = 1e-6)
{
    auto evaluate = [&] {
        ad::Tape tape(false);
        return build(tape).value()[0];
    };
    store.zero_grad();
    {
        ad::Tape tape;
        ad::backward(build(tape), store);
    }
    GradCheck out;
    for (auto &p : store) {
        for (std::size_t j = 0; j < p.value.size(); ++j) {
            const double keep = p.value[j];
            p.value[j] = keep + step;
            const double up = evaluate();
            p.value[j] = keep - step;
            const double down = evaluate();
            p.value[j] = keep;
            const double e = fd_error(p.grad[j], (up - down) / (2.0 * step));
            ++out.checked;
            if (e > out.worst) {
                out.worst = e;
                out.where = p.name + "[" + std::to_string(j) + "]";
            }
        }
    }
    store.zero_grad();
    return out;
}

// Central differences of a scalar function of several tensors against the
// tape gradient. The tensors become leaves of a scratch parameter store;
// `build` maps them to a single-element Var.
inline GradCheck check_gradients(std::vector<ad::Tensor> inputs,
                                 const std::function<ad::Var(ad::Tape &, const std::vector<ad::Var> &)> &build,
                                 double step = 1e-6)
{
    ad::ParameterStore store;
    for (std::size_t i = 0; i < inputs.size(); ++i)
        store.add("x" + std::to_string(i), std::move(inputs[i]));
    return check_parameter_gradients(
        store,
        [&](ad::Tape &tape) {
            std::vector<ad::Var> vs;
            for (std::size_t i = 0; i < store.size(); ++i)
                vs.push_back(tape.parameter(store, i));
            return build(tape, vs);
        },
        step);
}

// Small 3x3 style configuration used throughout the unit tests.
inline ChannelGenConfig small_channel(int points_per_side = 3, int users = 2, std::uint64_t seed = 11)
{
    ChannelGenConfig c;
    c.points_per_side = points_per_side;
    c.users = users;
    c.paths = 4;
    c.seed = seed;
    return c;
}

} // namespace maopt::test

#endif
