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

#include "test_util.hpp"

#include "maopt/error.hpp"
#include "maopt/experiment.hpp"

#include <doctest.h>

#include <clocale>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace maopt;

namespace {

std::string slurp(const std::filesystem::path &p)
{
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string error_of(const std::function<void()> &f)
{
    try {
        f();
    } catch (const Error &e) {
        return e.what();
    }
    return {};
}

KeyValueConfig toy_config()
{
    return KeyValueConfig::parse("points_per_side = 4\nusers = 2\nantennas = 3\n"
                                 "embed = 8\nhidden = 8\nheads = 2\nencoder_layers = 1\n"
                                 "bf_width = 8\nbf_layers = 1\nrecord_timing = false\n");
}

} // namespace

TEST_CASE("key-value parsing")
{
    const auto c = KeyValueConfig::parse("# comment\n\nseed = 7\n  name=hello world  \nlist = 1, 2.5 ,3\n"
                                         "flag = true\nwords = a+b, c\n",
                                         "test.cfg");
    CHECK(c.get_u64("seed", 0) == 7);
    CHECK(c.get_string("name", "") == "hello world");
    CHECK(c.get_doubles("list", {}) == std::vector<double>{1.0, 2.5, 3.0});
    CHECK(c.get_bool("flag", false));
    CHECK(c.get_strings("words", {}) == std::vector<std::string>{"a+b", "c"});
    CHECK(c.get_int("missing", -4) == -4);
    CHECK(c.keys().size() == 5);

    const std::string dup = error_of([] { KeyValueConfig::parse("a = 1\na = 2\n", "x.cfg"); });
    CHECK(dup.find("x.cfg:2") != std::string::npos);
    CHECK_FALSE(error_of([] { KeyValueConfig::parse("just words\n"); }).empty());

    const auto bad = KeyValueConfig::parse("n = 12abc\n", "y.cfg");
    const std::string msg = error_of([&] { bad.get_int("n", 0); });
    CHECK(msg.find("'n'") != std::string::npos);
    CHECK(msg.find("y.cfg:1") != std::string::npos);
    CHECK_FALSE(error_of([&] { KeyValueConfig::parse("b = maybe\n").get_bool("b", false); }).empty());

    const std::string unknown = error_of([&] { c.reject_unknown({"seed", "name"}); });
    CHECK(unknown.find("list") != std::string::npos);
    CHECK(unknown.find("flag") != std::string::npos);
}

TEST_CASE("number formatting ignores the locale")
{
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(20.0) == "20");
    CHECK(format_double(1.0 / 3.0) == "0.333333333");
    CHECK(format_double(12345678912.0) == "1.23456789e+10");
    const char *old = std::setlocale(LC_NUMERIC, nullptr);
    const std::string keep = old ? old : "C";
    if (std::setlocale(LC_NUMERIC, "de_DE.UTF-8"))
        CHECK(format_double(2.5) == "2.5");
    std::setlocale(LC_NUMERIC, keep.c_str());
}

TEST_CASE("run settings from a config")
{
    const RunSettings s = RunSettings::from_config(KeyValueConfig::parse("wavelength = 0.05\n"));
    CHECK(s.channel.region_side == doctest::Approx(0.10));
    CHECK(s.channel.points_per_side == 7);
    CHECK(s.antennas == 6);
    CHECK(s.sweep_antennas == std::vector<std::size_t>{6});

    const RunSettings o = RunSettings::from_config(KeyValueConfig::parse("seed = 3\n"), 99);
    CHECK(o.seed() == 99);
    CHECK(o.train.seed == 99);

    CHECK(error_of([] { RunSettings::from_config(KeyValueConfig::parse("colour = red\n")); }).find("colour") !=
          std::string::npos);
    CHECK_FALSE(error_of([] { RunSettings::from_config(KeyValueConfig::parse("methods = magic\n")); }).empty());
    CHECK_FALSE(error_of([] { RunSettings::from_config(KeyValueConfig::parse("baseline = mean\n")); }).empty());
    CHECK_FALSE(error_of([] { RunSettings::from_config(KeyValueConfig::parse("antennas = 50\n")); }).empty());
    // C(49, 6) exceeds the default oracle budget.
    const std::string oracle = error_of([] { RunSettings::from_config(KeyValueConfig::parse("methods = oracle\n")); });
    CHECK(oracle.find("oracle_budget") != std::string::npos);
}

TEST_CASE("held-out split never reuses training channels")
{
    const RunSettings s = RunSettings::from_config(toy_config());
    RunSettings t = s;
    t.train_samples = 5;
    const Dataset train = make_train_set(t);
    const Dataset eval = make_eval_set(s, 5);
    for (const auto &a : train.samples)
        for (const auto &b : eval.samples)
            CHECK(a.h != b.h);
    CHECK(eval_split_seed(s.seed()) != s.seed());
}

TEST_CASE("experiment table: row count, order, shared samples, byte-stable CSV")
{
    auto cfg = toy_config();
    cfg.set("p_max_dbm_list", "10, 15, 20");
    cfg.set("methods", "strongest+wmmse, random+wmmse");
    const RunSettings s = RunSettings::from_config(cfg);
    const Dataset d = make_eval_set(s, 8);
    const auto rows = run_experiment(s, d, nullptr);
    REQUIRE(rows.size() == 6);
    CHECK(rows[0].method == "strongest+wmmse");
    CHECK(rows[1].method == "random+wmmse");
    CHECK(rows[0].p_max_dbm == 10.0);
    CHECK(rows[5].p_max_dbm == 20.0);
    for (const auto &r : rows) {
        CHECK(r.n == 16);
        CHECK(r.m == 3);
        CHECK(r.k == 2);
        CHECK(r.feasibility == 1.0);
        CHECK(r.mean_ms == 0.0);
    }

    const auto dir = std::filesystem::temp_directory_path() / "maopt_exp";
    std::filesystem::create_directories(dir);
    write_results_csv(dir / "a.csv", rows);
    write_results_csv(dir / "b.csv", run_experiment(s, d, nullptr));
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    CHECK(slurp(dir / "a.csv").rfind("method,N,M,K,P_max_dBm,mean_sum_rate,std,feasibility,mean_ms\n", 0) == 0);
    write_plot_csv(dir / "plot.csv", rows, false);
    const std::string plot = slurp(dir / "plot.csv");
    CHECK(plot.rfind("x,series,y\n10,strongest+wmmse,", 0) == 0);
    std::filesystem::remove_all(dir);

    cfg.set("antennas_list", "2, 3");
    const auto swept = run_experiment(RunSettings::from_config(cfg), d, nullptr);
    CHECK(swept.size() == 12);
    CHECK(swept.front().m == 2);
    CHECK(swept.back().m == 3);
}

TEST_CASE("proposed without a checkpoint asks for training first")
{
    auto cfg = toy_config();
    cfg.set("methods", "proposed");
    const RunSettings s = RunSettings::from_config(cfg);
    const Dataset d = make_eval_set(s, 2);
    const std::string msg = error_of([&] { run_experiment(s, d, nullptr); });
    CHECK(msg.find("train") != std::string::npos);
}

TEST_CASE("every method evaluates through the same interface")
{
    auto cfg = toy_config();
    cfg.set("methods", "proposed, random+wmmse, strongest+wmmse, strongest+zf, oracle");
    const RunSettings s = RunSettings::from_config(cfg);
    const Dataset d = make_eval_set(s, 4);
    const Model model = Model::create(s.positioning, s.beamforming, s.channel.wavelength, s.seed());
    const auto rows = run_experiment(s, d, &model);
    CHECK(rows.size() == 5 * s.sweep_dbm.size());
    for (const auto &r : rows) {
        CHECK(r.feasibility == 1.0);
        CHECK(r.mean_sum_rate > 0.0);
    }
    // The oracle bounds every WMMSE-based positioning on the same samples.
    for (std::size_t i = 0; i < rows.size(); i += 5) {
        CHECK(rows[i + 4].mean_sum_rate >= rows[i + 1].mean_sum_rate - 1e-9);
        CHECK(rows[i + 4].mean_sum_rate >= rows[i + 2].mean_sum_rate - 1e-9);
    }
}
