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

#ifndef MAOPT_CONFIG_HPP
#define MAOPT_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace maopt {

// Flat "key = value" text. '#' starts a comment, blank lines are skipped, keys
// are unique. Values are typed on access; a malformed value names its key and
// line.
class KeyValueConfig {
public:
    static KeyValueConfig parse(const std::string &text, const std::string &origin = "<string>");
    static KeyValueConfig load(const std::filesystem::path &path);

    bool has(const std::string &key) const { return entries_.count(key) != 0; }
    void set(const std::string &key, const std::string &value);
    std::vector<std::string> keys() const;

    std::string get_string(const std::string &key, const std::string &fallback) const;
    std::int64_t get_int(const std::string &key, std::int64_t fallback) const;
    std::uint64_t get_u64(const std::string &key, std::uint64_t fallback) const;
    double get_double(const std::string &key, double fallback) const;
    bool get_bool(const std::string &key, bool fallback) const;
    // Comma-separated list of numbers or words.
    std::vector<double> get_doubles(const std::string &key, const std::vector<double> &fallback) const;
    std::vector<std::string> get_strings(const std::string &key, const std::vector<std::string> &fallback) const;

    // Throws Error(invalid_argument) listing every key not in `known`.
    void reject_unknown(const std::set<std::string> &known) const;

private:
    struct Entry {
        std::string value;
        int line = 0;
    };
    const Entry *find(const std::string &key) const;
    std::string where(const std::string &key, const Entry &e) const;

    std::map<std::string, Entry> entries_;
    std::string origin_;
};

// Rendering with 9 significant digits, '.' decimal
// point, independent of the C locale.
std::string format_double(double v);

} // namespace maopt

#endif
