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

#include "maopt/parameters.hpp"
#include "maopt/error.hpp"

#include <cmath>

namespace maopt::ad {

std::size_t ParameterStore::add(std::string name, Tensor init)
{
    if (index_.count(name))
        throw Error(Errc::invalid_argument, "parameter store: duplicate name '" + name + "'");
    Parameter p;
    p.name = name;
    p.grad = Tensor(init.shape());
    p.first_moment = Tensor(init.shape());
    p.second_moment = Tensor(init.shape());
    p.value = std::move(init);
    params_.push_back(std::move(p));
    index_.emplace(std::move(name), params_.size() - 1);
    return params_.size() - 1;
}

std::optional<std::size_t> ParameterStore::find(const std::string &name) const
{
    auto it = index_.find(name);
    if (it == index_.end())
        return std::nullopt;
    return it->second;
}

Parameter &ParameterStore::at(const std::string &name)
{
    auto i = find(name);
    if (!i)
        throw Error(Errc::invalid_argument, "parameter store: no parameter named '" + name + "'");
    return params_[*i];
}

const Parameter &ParameterStore::at(const std::string &name) const
{
    return const_cast<ParameterStore *>(this)->at(name);
}

std::size_t ParameterStore::scalar_count() const noexcept
{
    std::size_t n = 0;
    for (const auto &p : params_)
        n += p.value.size();
    return n;
}

void ParameterStore::zero_grad()
{
    for (auto &p : params_)
        p.grad.fill(0.0);
}

double ParameterStore::grad_norm() const
{
    double s = 0.0;
    for (const auto &p : params_)
        for (double g : p.grad.values())
            s += g * g;
    return std::sqrt(s);
}

void ParameterStore::scale_grad(double factor)
{
    for (auto &p : params_)
        for (double &g : p.grad.values())
            g *= factor;
}

GradientBuffer::GradientBuffer(const ParameterStore &store)
{
    grads_.reserve(store.size());
    for (const auto &p : store)
        grads_.emplace_back(p.value.shape());
}

void GradientBuffer::zero()
{
    for (auto &g : grads_)
        g.fill(0.0);
}

void GradientBuffer::axpy(double alpha, const GradientBuffer &other)
{
    if (other.size() != size())
        throw Error(Errc::shape_mismatch, "gradient buffer: size mismatch in axpy");
    for (std::size_t i = 0; i < grads_.size(); ++i) {
        auto dst = grads_[i].values();
        auto src = other.grads_[i].values();
        for (std::size_t j = 0; j < dst.size(); ++j)
            dst[j] += alpha * src[j];
    }
}

void GradientBuffer::add_to(ParameterStore &store, double weight) const
{
    if (store.size() != size())
        throw Error(Errc::shape_mismatch, "gradient buffer: store has a different parameter count");
    for (std::size_t i = 0; i < grads_.size(); ++i) {
        auto dst = store[i].grad.values();
        auto src = grads_[i].values();
        for (std::size_t j = 0; j < dst.size(); ++j)
            dst[j] += weight * src[j];
    }
}

double GradientBuffer::norm() const
{
    double s = 0.0;
    for (const auto &g : grads_)
        for (double v : g.values())
            s += v * v;
    return std::sqrt(s);
}

void adam_step(ParameterStore &store, const AdamConfig &cfg)
{
    for (const auto &p : store)
        if (!p.grad.all_finite())
            throw Error(Errc::numeric, "adam: non-finite gradient in parameter '" + p.name + "'");

    for (auto &p : store) {
        ++p.step;
        const double t = static_cast<double>(p.step);
        const double c1 = 1.0 - std::pow(cfg.beta1, t);
        const double c2 = 1.0 - std::pow(cfg.beta2, t);
        auto value = p.value.values();
        auto grad = p.grad.values();
        auto m = p.first_moment.values();
        auto v = p.second_moment.values();
        for (std::size_t j = 0; j < value.size(); ++j) {
            m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * grad[j];
            v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * grad[j] * grad[j];
            const double m_hat = m[j] / c1;
            const double v_hat = v[j] / c2;
            value[j] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
            grad[j] = 0.0;
        }
    }
}

} // namespace maopt::ad
