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

#include "maopt/checkpoint.hpp"
#include "binary_io.hpp"

#include <fstream>

namespace maopt {

namespace {
constexpr char kMagic[5] = "MACK";
constexpr std::uint32_t kVersion = 1;
} // namespace

void save_tensors(const std::filesystem::path &path, const std::vector<NamedTensor> &entries)
{
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os)
        throw Error(Errc::io, "checkpoint: cannot open '" + path.string() + "' for writing");
    io::put_magic(os, kMagic);
    io::put<std::uint32_t>(os, kVersion);
    io::put<std::uint32_t>(os, static_cast<std::uint32_t>(entries.size()));
    for (const auto &e : entries) {
        io::put<std::uint32_t>(os, static_cast<std::uint32_t>(e.name.size()));
        os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
        io::put<std::uint32_t>(os, static_cast<std::uint32_t>(e.tensor.rank()));
        for (auto d : e.tensor.shape())
            io::put<std::uint64_t>(os, d);
    }
    for (const auto &e : entries)
        for (double v : e.tensor.values())
            io::put<double>(os, v);
    if (!os)
        throw Error(Errc::io, "checkpoint: write to '" + path.string() + "' failed");
}

std::vector<NamedTensor> load_tensors(const std::filesystem::path &path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw Error(Errc::io, "checkpoint: cannot open '" + path.string() + "'");
    const std::string what = "checkpoint '" + path.string() + "'";
    io::expect_magic(is, kMagic, what);
    const auto version = io::get<std::uint32_t>(is, what);
    if (version != kVersion)
        throw Error(Errc::io, what + ": unsupported version " + std::to_string(version));
    const auto count = io::get<std::uint32_t>(is, what);

    std::vector<NamedTensor> entries(count);
    for (auto &e : entries) {
        const auto len = io::get<std::uint32_t>(is, what);
        if (len > (1u << 16))
            throw Error(Errc::io, what + ": implausible name length");
        e.name.resize(len);
        if (!is.read(e.name.data(), len))
            throw Error(Errc::io, what + ": unexpected end of file");
        const auto rank = io::get<std::uint32_t>(is, what);
        if (rank > 8)
            throw Error(Errc::io, what + ": implausible rank for '" + e.name + "'");
        ad::Shape shape(rank);
        for (auto &d : shape)
            d = static_cast<std::size_t>(io::get<std::uint64_t>(is, what));
        e.tensor = ad::Tensor(shape);
    }
    for (auto &e : entries)
        for (double &v : e.tensor.values())
            v = io::get<double>(is, what);
    return entries;
}

} // namespace maopt
