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

#include "maopt/system_model.hpp"
#include "maopt/error.hpp"

#include <algorithm>
#include <cmath>

namespace maopt {

bool same_selection(SelectionSet a, SelectionSet b)
{
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    return a == b;
}

Eigen::MatrixXcd select_channel(const SelectionSet &selection, const Eigen::MatrixXcd &h)
{
    Eigen::MatrixXcd out(static_cast<Eigen::Index>(selection.size()), h.cols());
    for (std::size_t m = 0; m < selection.size(); ++m) {
        const int n = selection[m];
        if (n < 0 || n >= h.rows())
            throw Error(Errc::invalid_argument, "select_channel: index " + std::to_string(n) +
                                                    " out of range [0, " + std::to_string(h.rows()) + ")");
        out.row(static_cast<Eigen::Index>(m)) = h.row(n);
    }
    return out;
}

RateReport compute_rates(const Eigen::MatrixXcd &h_sel, const BeamformerSet &w, const std::vector<double> &noise)
{
    const Eigen::Index K = h_sel.cols();
    if (w.w.rows() != h_sel.rows() || w.w.cols() != K || noise.size() != static_cast<std::size_t>(K))
        throw Error(Errc::shape_mismatch, "compute_rates: channel, beamformer and noise dimensions disagree");
    // g(k, l) = h_k^H w_l
    const Eigen::MatrixXd g2 = (h_sel.adjoint() * w.w).cwiseAbs2();
    RateReport r;
    r.sinr.resize(static_cast<std::size_t>(K));
    r.rate.resize(static_cast<std::size_t>(K));
    for (Eigen::Index k = 0; k < K; ++k) {
        const double noise_k = noise[static_cast<std::size_t>(k)];
        if (!(noise_k > 0.0))
            throw Error(Errc::invalid_argument, "compute_rates: noise power must be positive");
        const double interference = g2.row(k).sum() - g2(k, k);
        const double sinr = g2(k, k) / (std::max(interference, 0.0) + noise_k);
        r.sinr[static_cast<std::size_t>(k)] = sinr;
        r.rate[static_cast<std::size_t>(k)] = std::log2(1.0 + sinr);
        r.sum_rate += r.rate[static_cast<std::size_t>(k)];
    }
    return r;
}

void restrict_mask(std::vector<bool> &mask, int chosen, const SamplingGrid &grid)
{
    const Point c = grid.points.at(static_cast<std::size_t>(chosen));
    mask[static_cast<std::size_t>(chosen)] = false;
    for (std::size_t n = 0; n < grid.size(); ++n)
        if (mask[n] && distance(grid.points[n], c) < grid.min_spacing - kDistanceSlack)
            mask[n] = false;
}

std::vector<bool> feasible_mask(const SelectionSet &prefix, const SamplingGrid &grid)
{
    std::vector<bool> mask(grid.size(), true);
    for (int a : prefix) {
        if (a < 0 || static_cast<std::size_t>(a) >= grid.size())
            throw Error(Errc::invalid_argument, "feasible_mask: index " + std::to_string(a) + " out of range");
        restrict_mask(mask, a, grid);
    }
    return mask;
}

bool check_feasibility(const SelectionSet &selection, const SamplingGrid &grid, std::size_t m)
{
    if (selection.size() != m)
        return false;
    for (std::size_t i = 0; i < selection.size(); ++i) {
        const int a = selection[i];
        if (a < 0 || static_cast<std::size_t>(a) >= grid.size())
            return false;
        for (std::size_t j = 0; j < i; ++j) {
            const int b = selection[j];
            if (a == b)
                return false;
            if (distance(grid.points[static_cast<std::size_t>(a)], grid.points[static_cast<std::size_t>(b)]) <
                grid.min_spacing - kDistanceSlack)
                return false;
        }
    }
    return true;
}

} // namespace maopt
