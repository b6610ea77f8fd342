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

#ifndef MAOPT_CHANNEL_HPP
#define MAOPT_CHANNEL_HPP

#include "maopt/rng.hpp"

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <vector>

namespace maopt {

using cdouble = std::complex<double>;

double dbm_to_watts(double dbm);
double watts_to_dbm(double watts);

struct ChannelGenConfig {
    double wavelength = 0.060;        // m
    double region_side = 0.120;       // m, square transmit region
    int points_per_side = 7;
    int paths = 16;                   // paths per user
    double ref_loss_db = 34.5;        // L0
    double pathloss_exponent = 3.67;  // alpha
    double dist_min = 100.0;          // m
    double dist_max = 200.0;          // m
    double noise_dbm = -100.0;
    int users = 4;
    double min_spacing = 0.030;       // d_min between selected antennas, m
    std::uint64_t seed = 1;

    // Throws Error(invalid_argument) naming the offending field.
    void validate() const;
};

struct Point {
    double x = 0.0;
    double y = 0.0;
};

double distance(Point a, Point b);

// Candidate antenna positions. The uniform square grid comes from
// build_grid(); arbitrary layouts (permuted or hand-built) are allowed and
// report points_per_side = 0.
struct SamplingGrid {
    std::vector<Point> points;
    double min_spacing = 0.0;
    int points_per_side = 0;

    std::size_t size() const noexcept { return points.size(); }
};

// Uniform grid spanning [0, side] x [0, side]; sampling point n sits at
// (col * spacing, row * spacing) with n = row * points_per_side + col.
SamplingGrid build_grid(const ChannelGenConfig &cfg);

struct UserPaths {
    double distance = 0.0;             // D_k, m
    std::vector<double> elevation;     // theta_{k,l} in [-pi/2, pi/2]
    std::vector<double> azimuth;       // phi_{k,l} in [-pi/2, pi/2]
    std::vector<cdouble> gains;        // eta_{l,k}
};

struct AoDs {
    std::vector<std::vector<double>> elevation; // [user][path]
    std::vector<std::vector<double>> azimuth;
};

// Joint density cos(theta) / (2 pi): theta = asin(2u - 1), phi = pi (u - 1/2).
// Per user: L elevations, then L azimuths.
AoDs sample_aods(Rng &rng, int users, int paths);

// Elevation from one uniform variate by inverse CDF.
double elevation_from_uniform(double u);

// i.i.d. CN(0, v) with v = 10^(-L0/10) * D^(-alpha); real, imaginary parts
// N(0, v/2) drawn in that order per path.
std::vector<cdouble> sample_path_gains(Rng &rng, double distance, int paths, double ref_loss_db,
                                       double pathloss_exponent);

double path_gain_variance(double distance, double ref_loss_db, double pathloss_exponent);

// exp(j 2 pi / lambda * (x cos(theta) sin(phi) + y sin(theta))).
cdouble steering_phase(Point p, double elevation, double azimuth, double wavelength);

// Draw order for one sample: K distances, then AoDs, then K x L gains.
std::vector<UserPaths> sample_paths(Rng &rng, const ChannelGenConfig &cfg);

struct ChannelRealization {
    Eigen::MatrixXcd h;                         // N x K
    std::shared_ptr<const SamplingGrid> grid;
    std::vector<double> noise;                  // per-user noise power, W

    std::size_t sites() const noexcept { return static_cast<std::size_t>(h.rows()); }
    std::size_t users() const noexcept { return static_cast<std::size_t>(h.cols()); }
};

// h_{nk} = sum_l eta_{l,k} * steering_phase(p_n, theta_{k,l}, phi_{k,l}).
ChannelRealization build_channel(std::shared_ptr<const SamplingGrid> grid, const std::vector<UserPaths> &paths,
                                 double wavelength, double noise_watts);

struct Dataset {
    std::shared_ptr<const SamplingGrid> grid;
    std::vector<ChannelRealization> samples;

    std::size_t size() const noexcept { return samples.size(); }
    std::size_t sites() const noexcept { return grid ? grid->size() : 0; }
    std::size_t users() const noexcept { return samples.empty() ? 0 : samples.front().users(); }
};

// Sample i depends only on (cfg.seed, i): its generator is seeded with
// derive_seed(cfg.seed, Stream::channel, first_index + i).
Dataset generate_dataset(const ChannelGenConfig &cfg, std::size_t count, std::size_t first_index = 0);
ChannelRealization generate_sample(const ChannelGenConfig &cfg, std::shared_ptr<const SamplingGrid> grid,
                                   std::size_t index);

// Dataset file (little-endian): "MACH", u32 version = 1, u32 N, u32 K,
// u32 count, u32 points-per-side, 2N f64 grid coordinates (x, y per point),
// then per sample 2NK f64 (re, im; n-major then k) followed by K f64 noise
// powers in W. The file does not carry d_min; callers supply it on load.
void save_dataset(const std::filesystem::path &path, const Dataset &data);
Dataset load_dataset(const std::filesystem::path &path, double min_spacing);

} // namespace maopt

#endif
