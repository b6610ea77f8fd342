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

#ifndef MAOPT_ERROR_HPP
#define MAOPT_ERROR_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace maopt {

// Error categories; the C API maps these one-to-one onto status codes.
enum class Errc {
    invalid_argument,
    shape_mismatch,
    infeasible,
    numeric,
    budget_exceeded,
    io,
};

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string &what) : std::runtime_error(what), code_(code) {}
    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

// Raised when a decoding state leaves no selectable sampling point.
class NoFeasibleChoice : public Error {
public:
    explicit NoFeasibleChoice(std::vector<int> prefix = {})
        : Error(Errc::infeasible, make_message(prefix)), prefix_(std::move(prefix)) {}

    // Selection made before the dead end (empty when raised from a bare softmax).
    const std::vector<int> &prefix() const noexcept { return prefix_; }

private:
    static std::string make_message(const std::vector<int> &prefix)
    {
        std::string msg = "no feasible choice";
        if (!prefix.empty()) {
            msg += " after partial selection [";
            for (std::size_t i = 0; i < prefix.size(); ++i)
                msg += (i ? "," : "") + std::to_string(prefix[i]);
            msg += "]";
        }
        return msg;
    }

    std::vector<int> prefix_;
};

} // namespace maopt

#endif
