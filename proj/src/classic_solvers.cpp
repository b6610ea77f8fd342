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

#include "maopt/classic_solvers.hpp"
#include "maopt/error.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace maopt {

void WmmseConfig::validate() const
{
    if (max_iterations < 1)
        throw Error(Errc::invalid_argument, "wmmse: max iterations must be >= 1");
    if (!(rate_tolerance > 0.0) || !(bisection_tolerance > 0.0))
        throw Error(Errc::invalid_argument, "wmmse: tolerances must be positive");
}

namespace {

void check_inputs(const Eigen::MatrixXcd &h, double p_max, const std::vector<double> &noise, const char *who)
{
    if (h.rows() < 1 || h.cols() < 1)
        throw Error(Errc::invalid_argument, std::string(who) + ": empty channel");
    if (noise.size() != static_cast<std::size_t>(h.cols()))
        throw Error(Errc::shape_mismatch, std::string(who) + ": noise length differs from user count");
    if (!(p_max > 0.0))
        throw Error(Errc::invalid_argument, std::string(who) + ": power budget must be positive");
}

BeamformerSet mrt(const Eigen::MatrixXcd &h, double p_max)
{
    BeamformerSet w;
    w.w = Eigen::MatrixXcd::Zero(h.rows(), h.cols());
    const double pk = p_max / static_cast<double>(h.cols());
    for (Eigen::Index k = 0; k < h.cols(); ++k) {
        const double n = h.col(k).norm();
        if (n > 0.0)
            w.w.col(k) = std::sqrt(pk) * h.col(k) / n;
    }
    return w;
}

} // namespace

WmmseResult wmmse(const Eigen::MatrixXcd &h, double p_max, const std::vector<double> &noise, const WmmseConfig &cfg)
{
    cfg.validate();
    check_inputs(h, p_max, noise, "wmmse");
    if (h.squaredNorm() == 0.0)
        throw Error(Errc::invalid_argument, "wmmse: channel is identically zero");
    const Eigen::Index M = h.rows(), K = h.cols();

    WmmseResult res;
    res.w = mrt(h, p_max);
    double rate = compute_rates(h, res.w, noise).sum_rate;
    res.rate_trace.push_back(rate);

    Eigen::VectorXcd u(K);
    Eigen::VectorXd v(K);
    for (int it = 1; it <= cfg.max_iterations; ++it) {
        const Eigen::MatrixXcd g = h.adjoint() * res.w.w;  // g(k, l) = h_k^H w_l
        for (Eigen::Index k = 0; k < K; ++k) {
            const double total = g.row(k).squaredNorm() + noise[static_cast<std::size_t>(k)];
            u(k) = g(k, k) / total;
            const double mse = 1.0 - std::norm(g(k, k)) / total;
            v(k) = 1.0 / std::max(mse, std::numeric_limits<double>::min());
        }

        Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(M, M);
        Eigen::MatrixXcd b(M, K);
        for (Eigen::Index k = 0; k < K; ++k) {
            a += v(k) * std::norm(u(k)) * h.col(k) * h.col(k).adjoint();
            b.col(k) = v(k) * u(k) * h.col(k);
        }
        // w = U (D + lambda)^-1 U^H b; pick the smallest lambda >= 0 meeting the budget.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(a);
        const Eigen::VectorXd d = eig.eigenvalues().cwiseMax(0.0);
        const Eigen::MatrixXcd proj = eig.eigenvectors().adjoint() * b;
        const Eigen::VectorXd mass = proj.rowwise().squaredNorm();
        const double dmax = d.maxCoeff();
        auto power = [&](double lambda) {
            double s = 0.0;
            for (Eigen::Index i = 0; i < M; ++i) {
                const double den = d(i) + lambda;
                if (den > 1e-12 * dmax)
                    s += mass(i) / (den * den);
                else if (mass(i) > 1e-24 * mass.sum())
                    return std::numeric_limits<double>::infinity();
            }
            return s;
        };
        double lambda = 0.0;
        if (!(power(0.0) <= p_max)) {
            double lo = 0.0;
            double hi = std::sqrt(mass.sum() / p_max);  // power(hi) <= p_max
            while (power(hi) > p_max)
                hi *= 2.0;
            while (hi - lo > cfg.bisection_tolerance * hi) {
                const double mid = 0.5 * (lo + hi);
                (power(mid) > p_max ? lo : hi) = mid;
            }
            lambda = hi;
        }
        Eigen::VectorXd inv(M);
        for (Eigen::Index i = 0; i < M; ++i) {
            const double den = d(i) + lambda;
            inv(i) = den > 1e-12 * dmax ? 1.0 / den : 0.0;
        }
        res.w.w = eig.eigenvectors() * inv.asDiagonal() * proj;
        if (!res.w.w.allFinite())
            throw Error(Errc::numeric, "wmmse: non-finite beamformer at iteration " + std::to_string(it));

        const double next = compute_rates(h, res.w, noise).sum_rate;
        if (!std::isfinite(next))
            throw Error(Errc::numeric, "wmmse: non-finite rate at iteration " + std::to_string(it));
        res.rate_trace.push_back(next);
        res.iterations = it;
        const bool done = std::abs(next - rate) <= cfg.rate_tolerance * std::max(std::abs(rate), 1e-300);
        rate = next;
        if (done)
            break;
    }
    return res;
}

BeamformerSet zero_forcing(const Eigen::MatrixXcd &h, double p_max)
{
    if (!(p_max > 0.0))
        throw Error(Errc::invalid_argument, "zero forcing: power budget must be positive");
    const Eigen::Index K = h.cols();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(h);
    if (h.rows() < K || qr.rank() < K)
        throw Error(Errc::infeasible, "ZF infeasible: channel has rank " + std::to_string(qr.rank()) + " < K = " +
                                          std::to_string(K));
    const Eigen::MatrixXcd gram = h.adjoint() * h;
    BeamformerSet w;
    w.w = h * gram.ldlt().solve(Eigen::MatrixXcd::Identity(K, K));
    const double pk = std::sqrt(p_max / static_cast<double>(K));
    for (Eigen::Index k = 0; k < K; ++k)
        w.w.col(k) *= pk / w.w.col(k).norm();
    return w;
}

SelectionSet strongest_positioning(const Eigen::MatrixXcd &h, const SamplingGrid &grid, std::size_t m)
{
    if (static_cast<std::size_t>(h.rows()) != grid.size())
        throw Error(Errc::shape_mismatch, "strongest positioning: channel rows differ from grid size");
    const Eigen::VectorXd score = h.cwiseAbs2().rowwise().mean();
    SelectionSet sel;
    std::vector<bool> mask(grid.size(), true);
    for (std::size_t t = 0; t < m; ++t) {
        int best = -1;
        for (std::size_t n = 0; n < grid.size(); ++n)
            if (mask[n] && (best < 0 || score(static_cast<Eigen::Index>(n)) > score(best)))
                best = static_cast<int>(n);
        if (best < 0)
            throw NoFeasibleChoice(sel);
        sel.push_back(best);
        restrict_mask(mask, best, grid);
    }
    return sel;
}

SelectionSet random_feasible_positioning(Rng &rng, const SamplingGrid &grid, std::size_t m, std::size_t max_retries)
{
    if (m < 1 || m > grid.size())
        throw Error(Errc::invalid_argument, "random positioning: M must be in [1, N]");
    std::vector<int> pool(grid.size());
    for (std::size_t attempt = 0; attempt < max_retries; ++attempt) {
        std::iota(pool.begin(), pool.end(), 0);
        // Partial Fisher-Yates: the first m entries form a uniform subset.
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(pool.size() - i));
            std::swap(pool[i], pool[j]);
        }
        SelectionSet sel(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(m));
        if (check_feasibility(sel, grid, m))
            return sel;
    }
    throw Error(Errc::budget_exceeded,
                "random positioning: no feasible subset after " + std::to_string(max_retries) + " draws");
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k)
{
    if (k > n)
        return 0;
    k = std::min(k, n - k);
    unsigned __int128 r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        r = r * (n - k + i) / i;
        if (r > std::numeric_limits<std::uint64_t>::max())
            return std::numeric_limits<std::uint64_t>::max();
    }
    return static_cast<std::uint64_t>(r);
}

OracleResult exhaustive_oracle(const Eigen::MatrixXcd &h, const SamplingGrid &grid, std::size_t m, double p_max,
                               const std::vector<double> &noise, const OracleConfig &cfg)
{
    const std::size_t N = grid.size();
    if (static_cast<std::size_t>(h.rows()) != N)
        throw Error(Errc::shape_mismatch, "oracle: channel rows differ from grid size");
    if (m < 1 || m > N)
        throw Error(Errc::invalid_argument, "oracle: M must be in [1, N]");
    const std::uint64_t count = binomial(N, m);
    if (count > cfg.budget)
        throw Error(Errc::budget_exceeded, "oracle: C(" + std::to_string(N) + ", " + std::to_string(m) + ") = " +
                                               std::to_string(count) + " subsets exceeds the budget of " +
                                               std::to_string(cfg.budget));
    OracleResult best;
    best.rates.sum_rate = -1.0;
    SelectionSet sel(m);
    std::iota(sel.begin(), sel.end(), 0);
    while (true) {
        if (check_feasibility(sel, grid, m)) {
            ++best.feasible_subsets;
            const Eigen::MatrixXcd hs = select_channel(sel, h);
            WmmseResult r = wmmse(hs, p_max, noise, cfg.wmmse);
            RateReport rep = compute_rates(hs, r.w, noise);
            if (rep.sum_rate > best.rates.sum_rate) {
                best.selection = sel;
                best.w = std::move(r.w);
                best.rates = std::move(rep);
            }
        }
        // Next combination in lexicographic order.
        std::size_t i = m;
        while (i > 0 && static_cast<std::size_t>(sel[i - 1]) == N - m + i - 1)
            --i;
        if (i == 0)
            break;
        ++sel[i - 1];
        for (std::size_t j = i; j < m; ++j)
            sel[j] = sel[j - 1] + 1;
    }
    if (best.feasible_subsets == 0)
        throw Error(Errc::infeasible, "oracle: no feasible subset of size " + std::to_string(m));
    return best;
}

} // namespace maopt
