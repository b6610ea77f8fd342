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

#ifndef MAOPT_CLASSIC_SOLVERS_HPP
#define MAOPT_CLASSIC_SOLVERS_HPP

#include "maopt/channel.hpp"
#include "maopt/system_model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace maopt {

struct WmmseConfig {
    int max_iterations = 200;
    double rate_tolerance = 1e-6;       // relative change of the sum rate
    double bisection_tolerance = 1e-10; // relative width of the multiplier bracket

    void validate() const;
};

struct WmmseResult {
    BeamformerSet w;
    std::vector<double> rate_trace;  // sum rate of the initial point, then after each iteration
    int iterations = 0;
};

// Weighted MMSE block-coordinate ascent started from MRT with equal power.
WmmseResult wmmse(const Eigen::MatrixXcd &h_sel, double p_max, const std::vector<double> &noise,
                  const WmmseConfig &cfg = {});

// Columns of H (H^H H)^{-1}, normalised, power p_max / K each.
// Throws Error(infeasible) "ZF infeasible" for rank-deficient H.
BeamformerSet zero_forcing(const Eigen::MatrixXcd &h_sel, double p_max);

// Greedy picks of the largest mean |h_nk|^2 among available points.
SelectionSet strongest_positioning(const Eigen::MatrixXcd &h, const SamplingGrid &grid, std::size_t m);

// Uniform M-subsets redrawn until feasible; Error(budget_exceeded) after
// max_retries draws.
SelectionSet random_feasible_positioning(Rng &rng, const SamplingGrid &grid, std::size_t m,
                                         std::size_t max_retries = 100000);

struct OracleConfig {
    std::uint64_t budget = 2000000;  // maximum C(N, M) accepted
    WmmseConfig wmmse;
};

struct OracleResult {
    SelectionSet selection;
    BeamformerSet w;
    RateReport rates;
    std::uint64_t feasible_subsets = 0;
};

// Every feasible M-subset in lexicographic order, WMMSE on each; the first
// subset reaching the maximum rate wins.
OracleResult exhaustive_oracle(const Eigen::MatrixXcd &h, const SamplingGrid &grid, std::size_t m, double p_max,
                               const std::vector<double> &noise, const OracleConfig &cfg = {});

// C(n, k), saturating at UINT64_MAX.
std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

} // namespace maopt

#endif
