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

#ifndef MAOPT_RNG_HPP
#define MAOPT_RNG_HPP

#include <cstdint>
#include <random>

namespace maopt {

// Stream identifiers mixed into derived seeds so that independent consumers of
// one master seed never share a stream.
enum class Stream : std::uint64_t {
    channel = 1,
    weights = 2,
    rollout = 3,
    batch = 4,
    baseline_random = 5,
    split = 6,
};

// SplitMix64 finaliser.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Seed of element `index` in `stream` under `master`:
//   mix64(mix64(mix64(master) ^ stream) ^ index)
std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index) noexcept;
std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index, std::uint64_t sub) noexcept;

// std::mt19937_64 with distribution transforms spelled out here (the standard
// library's distributions are implementation-defined, these are not):
//   uniform()      = (next() >> 11) * 2^-53                  in [0, 1)
//   normal()       = Box-Muller on two uniforms, no caching
//   uniform_index  = rejection sampling on next() for an unbiased index
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }
    double uniform();
    // Uniform on (0, 1]; safe for log().
    double uniform_open0();
    double normal();
    std::uint64_t uniform_index(std::uint64_t n);

private:
    std::mt19937_64 engine_;
};

} // namespace maopt

#endif
