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

#include "maopt/channel.hpp"
#include "maopt/error.hpp"
#include "binary_io.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

namespace maopt {

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

void ChannelGenConfig::validate() const
{
    auto fail = [](const std::string &msg) { throw Error(Errc::invalid_argument, "channel config: " + msg); };
    if (!(wavelength > 0.0))
        fail("wavelength must be positive");
    if (!(region_side > 0.0))
        fail("region side must be positive");
    if (points_per_side < 2)
        fail("points per side must be >= 2");
    if (paths < 1)
        fail("paths must be >= 1");
    if (!(dist_min > 0.0) || dist_max < dist_min)
        fail("distance range must satisfy 0 < min <= max");
    if (users < 1)
        fail("users must be >= 1");
    if (!(min_spacing >= 0.0))
        fail("minimum antenna spacing must be non-negative");
}

double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

SamplingGrid build_grid(const ChannelGenConfig &cfg)
{
    cfg.validate();
    SamplingGrid grid;
    grid.min_spacing = cfg.min_spacing;
    grid.points_per_side = cfg.points_per_side;
    const int n = cfg.points_per_side;
    const double spacing = cfg.region_side / static_cast<double>(n - 1);
    grid.points.reserve(static_cast<std::size_t>(n * n));
    for (int row = 0; row < n; ++row)
        for (int col = 0; col < n; ++col)
            grid.points.push_back({col * spacing, row * spacing});
    return grid;
}

double elevation_from_uniform(double u) { return std::asin(2.0 * u - 1.0); }

AoDs sample_aods(Rng &rng, int users, int paths)
{
    AoDs a;
    a.elevation.resize(static_cast<std::size_t>(users));
    a.azimuth.resize(static_cast<std::size_t>(users));
    for (int k = 0; k < users; ++k) {
        auto &el = a.elevation[static_cast<std::size_t>(k)];
        auto &az = a.azimuth[static_cast<std::size_t>(k)];
        el.resize(static_cast<std::size_t>(paths));
        az.resize(static_cast<std::size_t>(paths));
        for (auto &t : el)
            t = elevation_from_uniform(rng.uniform());
        for (auto &p : az)
            p = std::numbers::pi * (rng.uniform() - 0.5);
    }
    return a;
}

double path_gain_variance(double distance, double ref_loss_db, double pathloss_exponent)
{
    if (!(distance > 0.0))
        throw Error(Errc::invalid_argument, "path gains: distance must be positive");
    return std::pow(10.0, -ref_loss_db / 10.0) * std::pow(distance, -pathloss_exponent);
}

std::vector<cdouble> sample_path_gains(Rng &rng, double distance, int paths, double ref_loss_db,
                                       double pathloss_exponent)
{
    const double sd = std::sqrt(path_gain_variance(distance, ref_loss_db, pathloss_exponent) / 2.0);
    std::vector<cdouble> g(static_cast<std::size_t>(paths));
    for (auto &x : g) {
        const double re = rng.normal();
        const double im = rng.normal();
        x = cdouble(sd * re, sd * im);
    }
    return g;
}

cdouble steering_phase(Point p, double elevation, double azimuth, double wavelength)
{
    const double rho = p.x * std::cos(elevation) * std::sin(azimuth) + p.y * std::sin(elevation);
    return std::polar(1.0, 2.0 * std::numbers::pi / wavelength * rho);
}

std::vector<UserPaths> sample_paths(Rng &rng, const ChannelGenConfig &cfg)
{
    const auto K = static_cast<std::size_t>(cfg.users);
    std::vector<UserPaths> users(K);
    for (auto &u : users)
        u.distance = cfg.dist_min + (cfg.dist_max - cfg.dist_min) * rng.uniform();
    AoDs aods = sample_aods(rng, cfg.users, cfg.paths);
    for (std::size_t k = 0; k < K; ++k) {
        users[k].elevation = std::move(aods.elevation[k]);
        users[k].azimuth = std::move(aods.azimuth[k]);
    }
    for (auto &u : users)
        u.gains = sample_path_gains(rng, u.distance, cfg.paths, cfg.ref_loss_db, cfg.pathloss_exponent);
    return users;
}

ChannelRealization build_channel(std::shared_ptr<const SamplingGrid> grid, const std::vector<UserPaths> &paths,
                                 double wavelength, double noise_watts)
{
    if (!grid)
        throw Error(Errc::invalid_argument, "build_channel: missing grid");
    const auto N = static_cast<Eigen::Index>(grid->size());
    const auto K = static_cast<Eigen::Index>(paths.size());
    ChannelRealization c;
    c.h = Eigen::MatrixXcd::Zero(N, K);
    const double k0 = 2.0 * std::numbers::pi / wavelength;
    for (Eigen::Index k = 0; k < K; ++k) {
        const UserPaths &u = paths[static_cast<std::size_t>(k)];
        if (u.elevation.size() != u.gains.size() || u.azimuth.size() != u.gains.size())
            throw Error(Errc::shape_mismatch, "build_channel: inconsistent path counts for user " +
                                                  std::to_string(k));
        for (std::size_t l = 0; l < u.gains.size(); ++l) {
            // Wave-vector components projected on the array plane.
            const double kx = k0 * std::cos(u.elevation[l]) * std::sin(u.azimuth[l]);
            const double ky = k0 * std::sin(u.elevation[l]);
            for (Eigen::Index n = 0; n < N; ++n) {
                const Point p = grid->points[static_cast<std::size_t>(n)];
                c.h(n, k) += u.gains[l] * std::polar(1.0, kx * p.x + ky * p.y);
            }
        }
    }
    c.noise.assign(static_cast<std::size_t>(K), noise_watts);
    c.grid = std::move(grid);
    return c;
}

ChannelRealization generate_sample(const ChannelGenConfig &cfg, std::shared_ptr<const SamplingGrid> grid,
                                   std::size_t index)
{
    Rng rng(derive_seed(cfg.seed, Stream::channel, index));
    auto paths = sample_paths(rng, cfg);
    return build_channel(std::move(grid), paths, cfg.wavelength, dbm_to_watts(cfg.noise_dbm));
}

Dataset generate_dataset(const ChannelGenConfig &cfg, std::size_t count, std::size_t first_index)
{
    if (count < 1)
        throw Error(Errc::invalid_argument, "generate_dataset: count must be >= 1");
    Dataset d;
    d.grid = std::make_shared<const SamplingGrid>(build_grid(cfg));
    d.samples.reserve(count);
    for (std::size_t i = 0; i < count; ++i)
        d.samples.push_back(generate_sample(cfg, d.grid, first_index + i));
    return d;
}

namespace {
constexpr char kDatasetMagic[5] = "MACH";
constexpr std::uint32_t kDatasetVersion = 1;
} // namespace

void save_dataset(const std::filesystem::path &path, const Dataset &data)
{
    if (!data.grid)
        throw Error(Errc::invalid_argument, "save_dataset: dataset has no grid");
    const std::size_t N = data.sites();
    const std::size_t K = data.users();
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw Error(Errc::io, "dataset: cannot open '" + path.string() + "' for writing");
    io::put_magic(os, kDatasetMagic);
    io::put<std::uint32_t>(os, kDatasetVersion);
    io::put<std::uint32_t>(os, static_cast<std::uint32_t>(N));
    io::put<std::uint32_t>(os, static_cast<std::uint32_t>(K));
    io::put<std::uint32_t>(os, static_cast<std::uint32_t>(data.size()));
    io::put<std::uint32_t>(os, static_cast<std::uint32_t>(data.grid->points_per_side));
    for (const Point &p : data.grid->points) {
        io::put<double>(os, p.x);
        io::put<double>(os, p.y);
    }
    for (const auto &s : data.samples) {
        if (s.sites() != N || s.users() != K || s.noise.size() != K)
            throw Error(Errc::shape_mismatch, "save_dataset: sample dimensions differ from the dataset");
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t k = 0; k < K; ++k) {
                const cdouble v = s.h(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
                io::put<double>(os, v.real());
                io::put<double>(os, v.imag());
            }
        for (double v : s.noise)
            io::put<double>(os, v);
    }
    if (!os)
        throw Error(Errc::io, "dataset: write to '" + path.string() + "' failed");
}

Dataset load_dataset(const std::filesystem::path &path, double min_spacing)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw Error(Errc::io, "dataset: cannot open '" + path.string() + "'");
    const std::string what = "dataset '" + path.string() + "'";
    io::expect_magic(is, kDatasetMagic, what);
    const auto version = io::get<std::uint32_t>(is, what);
    if (version != kDatasetVersion)
        throw Error(Errc::io, what + ": unsupported version " + std::to_string(version));
    const auto N = io::get<std::uint32_t>(is, what);
    const auto K = io::get<std::uint32_t>(is, what);
    const auto count = io::get<std::uint32_t>(is, what);
    const auto pps = io::get<std::uint32_t>(is, what);

    auto grid = std::make_shared<SamplingGrid>();
    grid->min_spacing = min_spacing;
    grid->points_per_side = static_cast<int>(pps);
    grid->points.resize(N);
    for (auto &p : grid->points) {
        p.x = io::get<double>(is, what);
        p.y = io::get<double>(is, what);
    }
    Dataset d;
    d.grid = grid;
    d.samples.resize(count);
    for (auto &s : d.samples) {
        s.h.resize(N, K);
        for (std::uint32_t n = 0; n < N; ++n)
            for (std::uint32_t k = 0; k < K; ++k) {
                const double re = io::get<double>(is, what);
                const double im = io::get<double>(is, what);
                s.h(n, k) = cdouble(re, im);
            }
        s.noise.resize(K);
        for (auto &v : s.noise)
            v = io::get<double>(is, what);
        s.grid = grid;
    }
    return d;
}

} // namespace maopt
