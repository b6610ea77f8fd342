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

#include "maopt/tensor.hpp"
#include "maopt/error.hpp"

#include <algorithm>
#include <cmath>

namespace maopt::ad {

std::size_t shape_size(const Shape &shape)
{
    std::size_t n = 1;
    for (auto d : shape)
        n *= d;
    return n;
}

std::string shape_string(const Shape &shape)
{
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i)
            s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data))
{
    if (shape_size(shape_) != data_.size())
        throw Error(Errc::shape_mismatch, "tensor: shape " + shape_string(shape_) + " does not hold " +
                                              std::to_string(data_.size()) + " values");
}

Tensor Tensor::row(std::vector<double> v)
{
    const std::size_t n = v.size();
    return Tensor(Shape{1, n}, std::move(v));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> v)
{
    return Tensor(Shape{rows, cols}, std::move(v));
}

std::size_t Tensor::rows() const
{
    if (rank() == 2)
        return shape_[0];
    if (rank() <= 1)
        return 1;
    throw Error(Errc::shape_mismatch, "tensor: rows() on rank-" + std::to_string(rank()) + " tensor");
}

std::size_t Tensor::cols() const
{
    if (rank() == 2)
        return shape_[1];
    if (rank() == 1)
        return shape_[0];
    if (rank() == 0)
        return 1;
    throw Error(Errc::shape_mismatch, "tensor: cols() on rank-" + std::to_string(rank()) + " tensor");
}

double Tensor::item() const
{
    if (data_.size() != 1)
        throw Error(Errc::shape_mismatch, "tensor: item() on shape " + shape_string(shape_));
    return data_[0];
}

bool Tensor::all_finite() const noexcept
{
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::reshape(Shape shape)
{
    if (shape_size(shape) != data_.size())
        throw Error(Errc::shape_mismatch,
                    "tensor: cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    shape_ = std::move(shape);
}

} // namespace maopt::ad
