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

// Little-endian stream helpers shared by the dataset and checkpoint formats.

#ifndef MAOPT_SRC_BINARY_IO_HPP
#define MAOPT_SRC_BINARY_IO_HPP

#include "maopt/error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

namespace maopt::io {

template <class T>
T to_little(T v)
{
    if constexpr (std::endian::native == std::endian::big) {
        unsigned char b[sizeof(T)];
        std::memcpy(b, &v, sizeof(T));
        for (std::size_t i = 0; i < sizeof(T) / 2; ++i)
            std::swap(b[i], b[sizeof(T) - 1 - i]);
        std::memcpy(&v, b, sizeof(T));
    }
    return v;
}

template <class T>
void put(std::ostream &os, T v)
{
    v = to_little(v);
    os.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

template <class T>
T get(std::istream &is, const std::string &what)
{
    T v{};
    if (!is.read(reinterpret_cast<char *>(&v), sizeof(T)))
        throw Error(Errc::io, what + ": unexpected end of file");
    return to_little(v);
}

inline void put_magic(std::ostream &os, const char (&magic)[5]) { os.write(magic, 4); }

inline void expect_magic(std::istream &is, const char (&magic)[5], const std::string &what)
{
    char buf[4] = {};
    if (!is.read(buf, 4) || std::memcmp(buf, magic, 4) != 0)
        throw Error(Errc::io, what + ": bad magic (expected \"" + std::string(magic, 4) + "\")");
}

} // namespace maopt::io

#endif
