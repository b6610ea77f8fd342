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

#include "maopt/classic_solvers.hpp"
#include "maopt/error.hpp"

#include <doctest.h>

#include <cmath>
#include <map>

using namespace maopt;

namespace {

Eigen::MatrixXcd channel(Eigen::Index m, Eigen::Index k, Rng &rng) { return test::random_complex(m, k, rng, 3e-6); }

SamplingGrid grid_of(int per_side, double side, double d_min)
{
    ChannelGenConfig c;
    c.points_per_side = per_side;
    c.region_side = side;
    c.min_spacing = d_min;
    return build_grid(c);
}

// Plain WMMSE written from the update equations, fixed iteration count,
// multiplier by bisection on the power. Used only as an oracle.
double reference_wmmse_rate(const Eigen::MatrixXcd &h, double p_max, double noise, int iterations = 400)
{
    const Eigen::Index M = h.rows(), K = h.cols();
    Eigen::MatrixXcd w(M, K);
    for (Eigen::Index k = 0; k < K; ++k)
        w.col(k) = std::sqrt(p_max / K) * h.col(k) / h.col(k).norm();
    auto rate = [&](const Eigen::MatrixXcd &v) {
        double r = 0.0;
        for (Eigen::Index k = 0; k < K; ++k) {
            double interference = noise;
            for (Eigen::Index l = 0; l < K; ++l)
                if (l != k)
                    interference += std::norm(h.col(k).dot(v.col(l)));
            r += std::log2(1.0 + std::norm(h.col(k).dot(v.col(k))) / interference);
        }
        return r;
    };
    for (int it = 0; it < iterations; ++it) {
        std::vector<cdouble> u(static_cast<std::size_t>(K));
        std::vector<double> omega(static_cast<std::size_t>(K));
        for (Eigen::Index k = 0; k < K; ++k) {
            double total = noise;
            for (Eigen::Index l = 0; l < K; ++l)
                total += std::norm(h.col(k).dot(w.col(l)));
            const cdouble g = h.col(k).dot(w.col(k));  // h_k^H w_k
            u[static_cast<std::size_t>(k)] = g / total;
            omega[static_cast<std::size_t>(k)] = total / (total - std::norm(g));
        }
        Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(M, M);
        for (Eigen::Index k = 0; k < K; ++k)
            a += omega[static_cast<std::size_t>(k)] * std::norm(u[static_cast<std::size_t>(k)]) * h.col(k) *
                 h.col(k).adjoint();
        auto solve = [&](double lambda) {
            Eigen::MatrixXcd b = a;
            b.diagonal().array() += lambda;
            Eigen::MatrixXcd rhs(M, K);
            for (Eigen::Index k = 0; k < K; ++k)
                rhs.col(k) = omega[static_cast<std::size_t>(k)] * u[static_cast<std::size_t>(k)] * h.col(k);
            return Eigen::MatrixXcd(b.fullPivLu().solve(rhs));
        };
        double lo = 0.0, hi = 1.0;
        Eigen::MatrixXcd cand = solve(1e-30);
        if (cand.squaredNorm() > p_max) {
            while (solve(hi).squaredNorm() > p_max)
                hi *= 2.0;
            for (int b = 0; b < 200; ++b) {
                const double mid = 0.5 * (lo + hi);
                (solve(mid).squaredNorm() > p_max ? lo : hi) = mid;
            }
            cand = solve(hi);
        }
        w = cand;
    }
    return rate(w);
}

} // namespace

TEST_CASE("wmmse: single user reaches the capacity")
{
    Rng rng(1);
    for (int i = 0; i < 20; ++i) {
        const Eigen::MatrixXcd h = channel(6, 1, rng);
        const double p = 0.1, noise = 1e-13;
        const WmmseResult r = wmmse(h, p, {noise});
        const double cap = std::log2(1.0 + p * h.squaredNorm() / noise);
        CHECK(std::abs(r.rate_trace.back() - cap) / cap <= 1e-6);
        CHECK(std::abs(h.col(0).dot(r.w.w.col(0))) == doctest::Approx(std::sqrt(p) * h.norm()).epsilon(1e-9));
    }
}

TEST_CASE("wmmse: orthogonal users get MRT with water-filling powers")
{
    Rng rng(2);
    for (int i = 0; i < 10; ++i) {
        const double a2 = 0.2 + rng.uniform(), b2 = 0.2 + 3.0 * rng.uniform(), noise = 0.05, p = 1.0;
        Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(3, 2);
        h(0, 0) = std::sqrt(a2) * std::polar(1.0, rng.uniform() * 6.0);
        h(2, 1) = std::sqrt(b2) * std::polar(1.0, rng.uniform() * 6.0);
        const WmmseResult r = wmmse(h, p, {noise, noise});
        const double got = r.rate_trace.back();

        // Closed-form water-filling: p_i = (level - noise / g_i)^+ with sum P.
        auto f = [&](double p1, double p2) { return std::log2(1 + p1 * a2 / noise) + std::log2(1 + p2 * b2 / noise); };
        const double fa = noise / a2, fb = noise / b2;
        double bp1 = 0.0, bp2 = 0.0;
        if (std::abs(fa - fb) >= p)
            (fa < fb ? bp1 : bp2) = p;
        else {
            const double level = (p + fa + fb) / 2.0;
            bp1 = level - fa;
            bp2 = level - fb;
        }
        const double best = f(bp1, bp2);
        CHECK(std::abs(got - best) <= 1e-4);
        // The objective is flat near the optimum, so the split is compared
        // after running to a much tighter tolerance.
        WmmseConfig tight;
        tight.rate_tolerance = 1e-14;
        tight.max_iterations = 20000;
        const WmmseResult rt = wmmse(h, p, {noise, noise}, tight);
        CHECK(std::norm(rt.w.w(0, 0)) == doctest::Approx(bp1).epsilon(1e-4));
        CHECK(std::abs(r.w.w(1, 0)) <= 1e-9);
        CHECK(std::abs(r.w.w(0, 1)) + std::abs(r.w.w(1, 1)) <= 1e-9);
    }
}

TEST_CASE("wmmse: monotone rate trace, feasible power")
{
    Rng rng(3);
    for (int i = 0; i < 30; ++i) {
        const Eigen::MatrixXcd h = channel(6, 4, rng);
        const WmmseResult r = wmmse(h, 0.1, std::vector<double>(4, 1e-13));
        CHECK(r.w.within_budget(0.1));
        CHECK(r.rate_trace.size() == static_cast<std::size_t>(r.iterations) + 1);
        for (std::size_t t = 1; t < r.rate_trace.size(); ++t)
            CHECK(r.rate_trace[t] >= r.rate_trace[t - 1] - 1e-9);
    }
    WmmseConfig bad;
    bad.max_iterations = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("zero forcing")
{
    Rng rng(4);
    const Eigen::MatrixXcd h = channel(6, 4, rng);
    const BeamformerSet w = zero_forcing(h, 0.1);
    CHECK(w.total_power() == doctest::Approx(0.1).epsilon(1e-12));
    for (Eigen::Index k = 0; k < 4; ++k)
        for (Eigen::Index l = 0; l < 4; ++l)
            if (k != l)
                CHECK(std::abs(h.col(k).dot(w.w.col(l))) <= 1e-10 * h.col(k).norm() * w.w.col(l).norm());

    const Eigen::MatrixXcd h1 = channel(5, 1, rng);
    CHECK((zero_forcing(h1, 2.0).w - std::sqrt(2.0) * h1 / h1.norm()).cwiseAbs().maxCoeff() <= 1e-12);

    const BeamformerSet id = zero_forcing(Eigen::MatrixXcd::Identity(2, 2), 2.0);
    CHECK((id.w - Eigen::MatrixXcd::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-12);

    Eigen::MatrixXcd rank1(3, 2);
    rank1.col(0) = h.col(0).head(3);
    rank1.col(1) = cdouble(0.0, 2.0) * h.col(0).head(3);
    try {
        zero_forcing(rank1, 1.0);
        FAIL("expected ZF infeasible");
    } catch (const Error &e) {
        CHECK(e.code() == Errc::infeasible);
        CHECK(std::string(e.what()).find("ZF infeasible") != std::string::npos);
    }
    CHECK_THROWS_AS(zero_forcing(channel(2, 3, rng), 1.0), Error);
}

TEST_CASE("strongest positioning")
{
    const SamplingGrid g = grid_of(3, 0.06, 0.03);  // spacing 30 mm
    Rng rng(5);
    Eigen::MatrixXcd h = test::random_complex(9, 2, rng);
    Eigen::Index best = 0;
    h.rowwise().squaredNorm().maxCoeff(&best);
    CHECK(strongest_positioning(h, g, 1) == SelectionSet{static_cast<int>(best)});

    const Eigen::MatrixXcd flat = Eigen::MatrixXcd::Constant(9, 2, cdouble(1.0, 1.0));
    CHECK(strongest_positioning(flat, g, 3) == SelectionSet{0, 1, 2});
    const SamplingGrid tight = grid_of(3, 0.04, 0.03);  // neighbours too close
    CHECK(strongest_positioning(flat, tight, 2) == SelectionSet{0, 2});

    Eigen::MatrixXcd planted = test::random_complex(9, 2, rng);
    planted.row(7) *= 100.0;
    CHECK(strongest_positioning(planted, tight, 2).front() == 7);
}

TEST_CASE("random feasible positioning")
{
    Rng rng(6);
    const SamplingGrid free = grid_of(3, 0.06, 0.0);
    for (int i = 0; i < 100; ++i)
        CHECK(check_feasibility(random_feasible_positioning(rng, free, 4, 1), free, 4));

    const SamplingGrid g = grid_of(5, 0.12, 0.03);
    for (int i = 0; i < 100; ++i)
        CHECK(check_feasibility(random_feasible_positioning(rng, g, 6), g, 6));

    const SamplingGrid crowded = grid_of(3, 0.04, 0.05);
    try {
        random_feasible_positioning(rng, crowded, 5, 1000);
        FAIL("expected budget error");
    } catch (const Error &e) {
        CHECK(e.code() == Errc::budget_exceeded);
    }
}

TEST_CASE("random feasible positioning is uniform over feasible sets")
{
    const SamplingGrid g = grid_of(3, 0.04, 0.03);  // 20 mm spacing, 30 mm rule
    std::map<std::pair<int, int>, int> counts;
    for (int a = 0; a < 9; ++a)
        for (int b = a + 1; b < 9; ++b)
            if (check_feasibility({a, b}, g, 2))
                counts[{a, b}] = 0;
    REQUIRE(counts.size() > 2);
    Rng rng(7);
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        SelectionSet s = random_feasible_positioning(rng, g, 2);
        std::sort(s.begin(), s.end());
        auto it = counts.find({s[0], s[1]});
        REQUIRE(it != counts.end());
        ++it->second;
    }
    const double expected = double(draws) / counts.size();
    double chi2 = 0.0;
    for (const auto &[set, c] : counts)
        chi2 += (c - expected) * (c - expected) / expected;
    // 99th percentile by the Wilson-Hilferty approximation.
    const double df = counts.size() - 1.0, z = 2.3263;
    const double critical = df * std::pow(1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df)), 3.0);
    INFO("chi2 " << chi2 << " critical " << critical);
    CHECK(chi2 < critical);
}

TEST_CASE("exhaustive oracle")
{
    ChannelGenConfig cfg = test::small_channel(3, 2, 8);
    cfg.min_spacing = 0.07;  // rules out edge neighbours (60 mm), keeps diagonals (85 mm)
    const Dataset d = generate_dataset(cfg, 3);
    const SamplingGrid &g = *d.grid;
    const double p = 0.1;

    for (const auto &s : d.samples) {
        const OracleResult r = exhaustive_oracle(s.h, g, 2, p, s.noise);
        CHECK(check_feasibility(r.selection, g, 2));
        CHECK(r.w.within_budget(p));
        const SelectionSet strongest = strongest_positioning(s.h, g, 2);
        const double rs = wmmse(select_channel(strongest, s.h), p, s.noise).rate_trace.back();
        CHECK(r.rates.sum_rate >= rs - 1e-12);

        // Independent nested loop with its own WMMSE.
        double best = -1.0;
        int count = 0;
        SelectionSet arg;
        for (int a = 0; a < 9; ++a)
            for (int b = a + 1; b < 9; ++b) {
                if (std::hypot(g.points[a].x - g.points[b].x, g.points[a].y - g.points[b].y) < cfg.min_spacing - 1e-12)
                    continue;
                ++count;
                Eigen::MatrixXcd hs(2, 2);
                hs.row(0) = s.h.row(a);
                hs.row(1) = s.h.row(b);
                const double rate = reference_wmmse_rate(hs, p, s.noise[0]);
                if (rate > best)
                    best = rate, arg = {a, b};
            }
        CHECK(r.feasible_subsets == static_cast<std::uint64_t>(count));
        CHECK(std::abs(r.rates.sum_rate - best) / best <= 1e-3);
    }

    // N = M: the only subset.
    ChannelGenConfig two = test::small_channel(2, 2, 9);
    two.min_spacing = 0.0;
    const Dataset d2 = generate_dataset(two, 1);
    const OracleResult all = exhaustive_oracle(d2.samples[0].h, *d2.grid, 4, p, d2.samples[0].noise);
    CHECK(all.selection == SelectionSet{0, 1, 2, 3});
    CHECK(all.feasible_subsets == 1);

    OracleConfig tight;
    tight.budget = 10;
    CHECK_THROWS_AS(exhaustive_oracle(d.samples[0].h, g, 2, p, d.samples[0].noise, tight), Error);
}

TEST_CASE("binomial coefficients")
{
    CHECK(binomial(49, 6) == 13983816ull);
    CHECK(binomial(16, 3) == 560);
    CHECK(binomial(5, 0) == 1);
    CHECK(binomial(3, 5) == 0);
    CHECK(binomial(200, 100) == UINT64_MAX);
}
