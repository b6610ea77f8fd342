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

#ifndef MAOPT_SYSTEM_MODEL_HPP
#define MAOPT_SYSTEM_MODEL_HPP

#include "maopt/channel.hpp"

#include <Eigen/Dense>

#include <vector>

namespace maopt {

// Ordered sampling-point indices in decode order. Rates do not depend on the
// order; compare as sets through same_selection().
using SelectionSet = std::vector<int>;

bool same_selection(SelectionSet a, SelectionSet b);

// Column k is w_k (length M).
struct BeamformerSet {
    Eigen::MatrixXcd w;

    std::size_t antennas() const noexcept { return static_cast<std::size_t>(w.rows()); }
    std::size_t users() const noexcept { return static_cast<std::size_t>(w.cols()); }
    double total_power() const { return w.squaredNorm(); }
    // Sum of squared norms must not exceed p_max + 1e-9 W.
    bool within_budget(double p_max) const { return total_power() <= p_max + 1e-9; }
};

struct RateReport {
    std::vector<double> sinr;
    std::vector<double> rate;   // bits/s/Hz
    double sum_rate = 0.0;
};

// Feasibility comparisons allow this much slack (m) so that points spaced at
// exactly d_min on a computed grid are not rejected by rounding.
inline constexpr double kDistanceSlack = 1e-12;

// Row m of the result is row selection[m] of h.
Eigen::MatrixXcd select_channel(const SelectionSet &selection, const Eigen::MatrixXcd &h);

// SINR_k = |h_k^H w_k|^2 / (sum_{l != k} |h_k^H w_l|^2 + noise_k).
RateReport compute_rates(const Eigen::MatrixXcd &h_sel, const BeamformerSet &w, const std::vector<double> &noise);

// Entry n is true iff p_n keeps at least d_min from every selected point.
std::vector<bool> feasible_mask(const SelectionSet &prefix, const SamplingGrid &grid);

// Incremental form: clears entries within d_min of `chosen` in an existing mask.
void restrict_mask(std::vector<bool> &mask, int chosen, const SamplingGrid &grid);

bool check_feasibility(const SelectionSet &selection, const SamplingGrid &grid, std::size_t m);

} // namespace maopt

#endif
