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

#ifndef MAOPT_CHECKPOINT_HPP
#define MAOPT_CHECKPOINT_HPP

#include "maopt/tensor.hpp"

#include <filesystem>
#include <string>
#include <vector>

// Checkpoint file layout (little-endian):
//
//   "MACK"            4 bytes magic
//   u32 version       = 1
//   u32 entry count   E
//   manifest, E times: u32 name length, name bytes (UTF-8), u32 rank, rank x u64 dims
//   payload,  E times: prod(dims) float64 values in manifest order
//
// Entries are written in the order given; load returns them in file order.

namespace maopt {

struct NamedTensor {
    std::string name;
    ad::Tensor tensor;
};

void save_tensors(const std::filesystem::path &path, const std::vector<NamedTensor> &entries);
std::vector<NamedTensor> load_tensors(const std::filesystem::path &path);

} // namespace maopt

#endif
