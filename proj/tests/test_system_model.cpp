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

#include "test_util.hpp"

#include "maopt/system_model.hpp"

#include <doctest.h>

#include <cmath>

using namespace maopt;

namespace {

SamplingGrid grid_of(int per_side, double side = 0.120, double d_min = 0.030)
{
    ChannelGenConfig c;
    c.points_per_side = per_side;
    c.region_side = side;
    c.min_spacing = d_min;
    return build_grid(c);
}

} // namespace

TEST_CASE("channel row selection")
{
    Rng rng(1);
    const Eigen::MatrixXcd h = test::random_complex(4, 3, rng);
    CHECK(select_channel({0, 1, 2, 3}, h) == h);
    const Eigen::MatrixXcd one = select_channel({2}, h);
    REQUIRE(one.rows() == 1);
    CHECK(one.row(0) == h.row(2));
    const Eigen::MatrixXcd a = select_channel({3, 0, 1}, h);
    const Eigen::MatrixXcd b = select_channel({1, 3, 0}, h);
    CHECK(a.row(0) == b.row(1));
    CHECK(a.row(1) == b.row(2));
    CHECK(a.row(2) == b.row(0));
    CHECK_THROWS(select_channel({4}, h));
}

TEST_CASE("rates: single user with matched beam")
{
    Rng rng(2);
    const Eigen::MatrixXcd h = test::random_complex(5, 1, rng);
    const double p = 0.1, noise = 1e-3;
    BeamformerSet w{std::sqrt(p) * h / h.norm()};
    const RateReport r = compute_rates(h, w, {noise});
    const double snr = p * h.squaredNorm() / noise;
    CHECK(r.sinr[0] == doctest::Approx(snr).epsilon(1e-12));
    CHECK(r.sum_rate == doctest::Approx(std::log2(1.0 + snr)).epsilon(1e-12));

    BeamformerSet zero{Eigen::MatrixXcd::Zero(5, 1)};
    CHECK(compute_rates(h, zero, {noise}).sum_rate == 0.0);
}

TEST_CASE("rates: hand-built orthogonal two-user instance")
{
    const double p = 2.0, noise = 0.5;
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Identity(2, 2);
    Eigen::MatrixXcd w = Eigen::MatrixXcd::Zero(2, 2);
    // Equal split of the budget: |w_k|^2 = P/2, no interference.
    w(0, 0) = std::sqrt(p / 2.0);
    w(1, 1) = std::sqrt(p / 2.0);
    const RateReport r = compute_rates(h, BeamformerSet{w}, {noise, noise});
    CHECK(r.sinr[0] == doctest::Approx((p / 2.0) / noise));
    CHECK(r.sinr[1] == doctest::Approx((p / 2.0) / noise));
    CHECK(r.sum_rate == doctest::Approx(2.0 * std::log2(1.0 + p / 2.0 / noise)));

    // Interference term: user 1 hears w_0 through a cross coupling.
    h(1, 0) = 1.0;  // h_0 = (1, 1)
    const RateReport q = compute_rates(h, BeamformerSet{w}, {noise, noise});
    const double signal = std::norm(w(0, 0)), interference = std::norm(w(1, 1));
    CHECK(q.sinr[0] == doctest::Approx(signal / (interference + noise)));
}

TEST_CASE("feasible mask geometry")
{
    const SamplingGrid five = grid_of(5);
    CHECK(feasible_mask({}, five) == std::vector<bool>(25, true));
    const auto m = feasible_mask({12}, five);
    for (std::size_t n = 0; n < 25; ++n)
        CHECK(m[n] == (n != 12));

    const SamplingGrid eight = grid_of(8);
    const int center = 3 * 8 + 3;
    const auto mask = feasible_mask({center}, eight);
    for (std::size_t n = 0; n < 64; ++n) {
        const double d = std::hypot(eight.points[n].x - eight.points[center].x,
                                    eight.points[n].y - eight.points[center].y);
        CHECK(mask[n] == (d >= 0.030));
    }

    auto incremental = feasible_mask({}, eight);
    restrict_mask(incremental, center, eight);
    restrict_mask(incremental, 60, eight);
    CHECK(incremental == feasible_mask({center, 60}, eight));
}

TEST_CASE("feasibility check")
{
    const SamplingGrid five = grid_of(5);  // spacing exactly d_min
    CHECK(check_feasibility({0, 1}, five, 2));
    CHECK_FALSE(check_feasibility({0, 0}, five, 2));
    CHECK_FALSE(check_feasibility({0, 1}, five, 3));
    CHECK_FALSE(check_feasibility({0, 25}, five, 2));

    const SamplingGrid eight = grid_of(8);
    CHECK_FALSE(check_feasibility({0, 1}, eight, 2));
    CHECK(check_feasibility({0, 2}, eight, 2));
    CHECK(same_selection({3, 1, 2}, {2, 3, 1}));
    CHECK_FALSE(same_selection({3, 1}, {3, 2}));
}

TEST_CASE("power budget check")
{
    Eigen::MatrixXcd w(2, 1);
    w << cdouble(0.3, 0.0), cdouble(0.0, 0.4);
    BeamformerSet b{w};
    CHECK(b.total_power() == doctest::Approx(0.25));
    CHECK(b.within_budget(0.25));
    CHECK_FALSE(b.within_budget(0.2));
}
