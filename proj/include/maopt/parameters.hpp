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

#ifndef MAOPT_PARAMETERS_HPP
#define MAOPT_PARAMETERS_HPP

#include "maopt/tensor.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace maopt::ad {

struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    Tensor first_moment;
    Tensor second_moment;
    std::int64_t step = 0;
};

// Named trainable tensors in insertion order. Indices returned by add() stay
// valid for the lifetime of the store (including copies of it).
class ParameterStore {
public:
    std::size_t add(std::string name, Tensor init);

    std::size_t size() const noexcept { return params_.size(); }
    Parameter &operator[](std::size_t i) { return params_[i]; }
    const Parameter &operator[](std::size_t i) const { return params_[i]; }

    std::optional<std::size_t> find(const std::string &name) const;
    Parameter &at(const std::string &name);
    const Parameter &at(const std::string &name) const;

    auto begin() noexcept { return params_.begin(); }
    auto end() noexcept { return params_.end(); }
    auto begin() const noexcept { return params_.begin(); }
    auto end() const noexcept { return params_.end(); }

    // Total number of scalar weights.
    std::size_t scalar_count() const noexcept;

    void zero_grad();
    double grad_norm() const;
    void scale_grad(double factor);

private:
    std::vector<Parameter> params_;
    std::map<std::string, std::size_t> index_;
};

// Gradient accumulator shaped like a store; used for private per-worker
// accumulation followed by an ordered reduction.
class GradientBuffer {
public:
    GradientBuffer() = default;
    explicit GradientBuffer(const ParameterStore &store);

    std::size_t size() const noexcept { return grads_.size(); }
    Tensor &operator[](std::size_t i) { return grads_[i]; }
    const Tensor &operator[](std::size_t i) const { return grads_[i]; }

    void zero();
    void axpy(double alpha, const GradientBuffer &other);
    void add_to(ParameterStore &store, double weight = 1.0) const;
    double norm() const;

private:
    std::vector<Tensor> grads_;
};

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// One bias-corrected Adam update of every parameter (descent on the stored
// gradient), then gradients reset to zero. Throws naming the first parameter
// whose gradient is not finite; nothing is modified in that case.
void adam_step(ParameterStore &store, const AdamConfig &cfg);

} // namespace maopt::ad

#endif
