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

#include "maopt/config.hpp"
#include "maopt/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace maopt {

namespace {

std::string trim(const std::string &s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string &s)
{
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(s);
    while (std::getline(is, item, ','))
        if (auto t = trim(item); !t.empty())
            out.push_back(t);
    return out;
}

template <class T>
std::optional<T> parse_number(const std::string &s)
{
    T v{};
    const char *b = s.data();
    const char *e = b + s.size();
    if (!s.empty() && s[0] == '+')
        ++b;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e)
        return std::nullopt;
    return v;
}

} // namespace

KeyValueConfig KeyValueConfig::parse(const std::string &text, const std::string &origin)
{
    KeyValueConfig cfg;
    cfg.origin_ = origin;
    std::istringstream is(text);
    std::string raw;
    int line = 0;
    while (std::getline(is, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty())
            continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw Error(Errc::invalid_argument, origin + ":" + std::to_string(line) + ": expected 'key = value'");
        const std::string key = trim(s.substr(0, eq));
        if (key.empty())
            throw Error(Errc::invalid_argument, origin + ":" + std::to_string(line) + ": empty key");
        if (cfg.entries_.count(key))
            throw Error(Errc::invalid_argument, origin + ":" + std::to_string(line) + ": duplicate key '" + key + "'");
        cfg.entries_[key] = {trim(s.substr(eq + 1)), line};
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path &path)
{
    std::ifstream is(path);
    if (!is)
        throw Error(Errc::io, "config: cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse(ss.str(), path.string());
}

void KeyValueConfig::set(const std::string &key, const std::string &value) { entries_[key] = {value, 0}; }

std::vector<std::string> KeyValueConfig::keys() const
{
    std::vector<std::string> out;
    for (const auto &[k, v] : entries_)
        out.push_back(k);
    return out;
}

const KeyValueConfig::Entry *KeyValueConfig::find(const std::string &key) const
{
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
}

std::string KeyValueConfig::where(const std::string &key, const Entry &e) const
{
    if (e.line == 0)
        return "config key '" + key + "'";
    return origin_ + ":" + std::to_string(e.line) + ": key '" + key + "'";
}

std::string KeyValueConfig::get_string(const std::string &key, const std::string &fallback) const
{
    const Entry *e = find(key);
    return e ? e->value : fallback;
}

std::int64_t KeyValueConfig::get_int(const std::string &key, std::int64_t fallback) const
{
    const Entry *e = find(key);
    if (!e)
        return fallback;
    auto v = parse_number<std::int64_t>(e->value);
    if (!v)
        throw Error(Errc::invalid_argument, where(key, *e) + " expects an integer, got '" + e->value + "'");
    return *v;
}

std::uint64_t KeyValueConfig::get_u64(const std::string &key, std::uint64_t fallback) const
{
    const Entry *e = find(key);
    if (!e)
        return fallback;
    auto v = parse_number<std::uint64_t>(e->value);
    if (!v)
        throw Error(Errc::invalid_argument,
                    where(key, *e) + " expects a non-negative integer, got '" + e->value + "'");
    return *v;
}

double KeyValueConfig::get_double(const std::string &key, double fallback) const
{
    const Entry *e = find(key);
    if (!e)
        return fallback;
    auto v = parse_number<double>(e->value);
    if (!v)
        throw Error(Errc::invalid_argument, where(key, *e) + " expects a number, got '" + e->value + "'");
    return *v;
}

bool KeyValueConfig::get_bool(const std::string &key, bool fallback) const
{
    const Entry *e = find(key);
    if (!e)
        return fallback;
    if (e->value == "true" || e->value == "1" || e->value == "yes")
        return true;
    if (e->value == "false" || e->value == "0" || e->value == "no")
        return false;
    throw Error(Errc::invalid_argument, where(key, *e) + " expects true or false, got '" + e->value + "'");
}

std::vector<double> KeyValueConfig::get_doubles(const std::string &key, const std::vector<double> &fallback) const
{
    const Entry *e = find(key);
    if (!e)
        return fallback;
    std::vector<double> out;
    for (const auto &item : split_list(e->value)) {
        auto v = parse_number<double>(item);
        if (!v)
            throw Error(Errc::invalid_argument, where(key, *e) + " expects numbers, got '" + item + "'");
        out.push_back(*v);
    }
    return out;
}

std::vector<std::string> KeyValueConfig::get_strings(const std::string &key,
                                                     const std::vector<std::string> &fallback) const
{
    const Entry *e = find(key);
    return e ? split_list(e->value) : fallback;
}

void KeyValueConfig::reject_unknown(const std::set<std::string> &known) const
{
    std::string bad;
    for (const auto &[k, e] : entries_)
        if (!known.count(k))
            bad += (bad.empty() ? "" : ", ") + k;
    if (!bad.empty())
        throw Error(Errc::invalid_argument, origin_ + ": unknown config keys: " + bad);
}

std::string format_double(double v)
{
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 9);
    if (ec != std::errc())
        throw Error(Errc::numeric, "format_double: conversion failed");
    return std::string(buf, p);
}

} // namespace maopt
