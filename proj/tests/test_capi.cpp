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

#include "maopt/maopt.h"

#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

namespace fs = std::filesystem;

struct Scratch {
    fs::path dir;
    Scratch() : dir(fs::temp_directory_path() / "maopt_capi") { fs::create_directories(dir); }
    ~Scratch() { fs::remove_all(dir); }
    std::string operator/(const std::string &name) const { return (dir / name).string(); }
};

mao_config *toy_config()
{
    mao_config *cfg = nullptr;
    REQUIRE(mao_config_create(&cfg) == MAO_OK);
    const char *kv[][2] = {{"points_per_side", "4"}, {"users", "2"}, {"antennas", "3"},  {"embed", "8"},
                           {"hidden", "8"},          {"heads", "2"}, {"encoder_layers", "1"}, {"bf_width", "8"},
                           {"bf_layers", "1"},       {"record_timing", "false"}};
    for (auto &p : kv)
        REQUIRE(mao_config_set(cfg, p[0], p[1]) == MAO_OK);
    REQUIRE(mao_config_set_seed(cfg, 17) == MAO_OK);
    return cfg;
}

std::string slurp(const std::string &p)
{
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("status names and null handles")
{
    CHECK(std::string(mao_status_name(MAO_OK)) == "ok");
    CHECK(std::string(mao_status_name(MAO_ERR_BUDGET)) == "budget exceeded");
    CHECK(std::string(mao_version()).size() > 0);

    CHECK(mao_config_create(nullptr) == MAO_ERR_INVALID_ARGUMENT);
    CHECK(std::string(mao_last_error()).find("NULL") != std::string::npos);
    size_t n = 0;
    CHECK(mao_dataset_info(nullptr, &n, nullptr, nullptr) == MAO_ERR_INVALID_ARGUMENT);
    mao_config_free(nullptr);
    mao_dataset_free(nullptr);
    mao_model_free(nullptr);
}

TEST_CASE("config errors are reported with their key")
{
    mao_config *cfg = nullptr;
    REQUIRE(mao_config_create(&cfg) == MAO_OK);
    CHECK(mao_config_validate(cfg) == MAO_OK);
    CHECK(mao_config_set(cfg, "no_such_key", "1") == MAO_ERR_INVALID_ARGUMENT);
    CHECK(std::string(mao_last_error()).find("no_such_key") != std::string::npos);
    CHECK(mao_config_set(cfg, "users", "lots") == MAO_OK);
    CHECK(mao_config_validate(cfg) == MAO_ERR_INVALID_ARGUMENT);
    CHECK(std::string(mao_last_error()).find("users") != std::string::npos);
    mao_config_free(cfg);

    mao_config *loaded = nullptr;
    CHECK(mao_config_load("/nonexistent/maopt.cfg", &loaded) == MAO_ERR_IO);
    CHECK(loaded == nullptr);
}

TEST_CASE("dataset generate, save, load and read back")
{
    Scratch tmp;
    mao_config *cfg = toy_config();
    mao_dataset *d = nullptr;
    REQUIRE(mao_dataset_generate(cfg, 4, MAO_SPLIT_TRAIN, &d) == MAO_OK);
    size_t count = 0, sites = 0, users = 0;
    REQUIRE(mao_dataset_info(d, &count, &sites, &users) == MAO_OK);
    CHECK(count == 4);
    CHECK(sites == 16);
    CHECK(users == 2);

    std::vector<double> a(2 * 16 * 2), b(a.size());
    CHECK(mao_dataset_channel(d, 4, a.data(), a.size()) == MAO_ERR_INVALID_ARGUMENT);
    CHECK(mao_dataset_channel(d, 0, a.data(), a.size() - 1) == MAO_ERR_SHAPE);
    REQUIRE(mao_dataset_channel(d, 3, a.data(), a.size()) == MAO_OK);

    REQUIRE(mao_dataset_save(d, (tmp / "d.bin").c_str()) == MAO_OK);
    mao_dataset *e = nullptr;
    REQUIRE(mao_dataset_load(cfg, (tmp / "d.bin").c_str(), &e) == MAO_OK);
    REQUIRE(mao_dataset_channel(e, 3, b.data(), b.size()) == MAO_OK);
    CHECK(a == b);

    mao_dataset *held = nullptr;
    REQUIRE(mao_dataset_generate(cfg, 4, MAO_SPLIT_EVAL, &held) == MAO_OK);
    REQUIRE(mao_dataset_channel(held, 3, b.data(), b.size()) == MAO_OK);
    CHECK(a != b);

    {
        std::ofstream(tmp / "bad.bin") << "MAC";
    }
    mao_dataset *bad = nullptr;
    CHECK(mao_dataset_load(cfg, (tmp / "bad.bin").c_str(), &bad) == MAO_ERR_IO);
    CHECK(bad == nullptr);

    mao_dataset_free(held);
    mao_dataset_free(e);
    mao_dataset_free(d);
    mao_config_free(cfg);
}

TEST_CASE("model lifecycle, evaluation and missing checkpoints")
{
    Scratch tmp;
    mao_config *cfg = toy_config();
    REQUIRE(mao_config_set(cfg, "epochs", "1") == MAO_OK);
    REQUIRE(mao_config_set(cfg, "steps_per_epoch", "2") == MAO_OK);
    REQUIRE(mao_config_set(cfg, "batch", "4") == MAO_OK);
    REQUIRE(mao_config_set(cfg, "eval_every", "1") == MAO_OK);
    mao_dataset *d = nullptr;
    REQUIRE(mao_dataset_generate(cfg, 6, MAO_SPLIT_TRAIN, &d) == MAO_OK);

    mao_eval_metrics m{};
    CHECK(mao_evaluate(cfg, nullptr, "proposed", d, nullptr, &m) == MAO_ERR_INVALID_ARGUMENT);
    CHECK(std::string(mao_last_error()).find("train") != std::string::npos);
    CHECK(mao_evaluate(cfg, nullptr, "magic", d, nullptr, &m) == MAO_ERR_INVALID_ARGUMENT);

    mao_model *model = nullptr;
    REQUIRE(mao_model_create(cfg, &model) == MAO_OK);
    int64_t step = -1;
    REQUIRE(mao_model_step(model, &step) == MAO_OK);
    CHECK(step == 0);
    REQUIRE(mao_evaluate(cfg, model, "proposed", d, (tmp / "eval.csv").c_str(), &m) == MAO_OK);
    CHECK(m.feasibility == 1.0);
    CHECK(m.mean_sum_rate > 0.0);
    CHECK(slurp(tmp / "eval.csv").find("\nproposed,16,3,2,20,") != std::string::npos);

    std::vector<std::string> lines;
    auto log = [](const char *line, void *user) { static_cast<std::vector<std::string> *>(user)->push_back(line); };
    REQUIRE(mao_train(cfg, model, d, nullptr, (tmp / "m.ckpt").c_str(), (tmp / "curve.csv").c_str(), log, &lines) ==
            MAO_OK);
    REQUIRE(mao_model_step(model, &step) == MAO_OK);
    CHECK(step == 2);
    CHECK_FALSE(lines.empty());

    mao_model *again = nullptr;
    REQUIRE(mao_model_load((tmp / "m.ckpt").c_str(), &again) == MAO_OK);
    REQUIRE(mao_model_step(again, &step) == MAO_OK);
    CHECK(step == 2);
    mao_eval_metrics m1{}, m2{};
    REQUIRE(mao_evaluate(cfg, model, "proposed", d, nullptr, &m1) == MAO_OK);
    REQUIRE(mao_evaluate(cfg, again, "proposed", d, nullptr, &m2) == MAO_OK);
    CHECK(m1.mean_sum_rate == m2.mean_sum_rate);

    mao_model *missing = nullptr;
    CHECK(mao_model_load((tmp / "none.ckpt").c_str(), &missing) == MAO_ERR_IO);
    CHECK(std::string(mao_last_error()).find("maopt train") != std::string::npos);

    REQUIRE(mao_config_set(cfg, "oracle_budget", "10") == MAO_OK);
    CHECK(mao_oracle(cfg, d, 0, 1, (tmp / "o.csv").c_str(), nullptr, nullptr) == MAO_ERR_BUDGET);

    mao_model_free(again);
    mao_model_free(model);
    mao_dataset_free(d);
    mao_config_free(cfg);
}

TEST_CASE("bench writes all three tables")
{
    Scratch tmp;
    mao_config *cfg = toy_config();
    REQUIRE(mao_config_set(cfg, "p_max_dbm_list", "10, 20") == MAO_OK);
    REQUIRE(mao_config_set(cfg, "methods", "random+wmmse, strongest+zf") == MAO_OK);
    mao_dataset *d = nullptr;
    REQUIRE(mao_dataset_generate(cfg, 3, MAO_SPLIT_EVAL, &d) == MAO_OK);
    REQUIRE(mao_bench(cfg, nullptr, d, (tmp / "out").c_str()) == MAO_OK);
    for (const char *f : {"results.csv", "plot_sum_rate.csv", "plot_time.csv"})
        CHECK(fs::exists(tmp.dir / "out" / f));
    std::istringstream rows(slurp(tmp / "out/results.csv"));
    std::string line;
    int n = 0;
    while (std::getline(rows, line))
        ++n;
    CHECK(n == 5);
    mao_dataset_free(d);
    mao_config_free(cfg);
}

TEST_CASE("run_command rejects unknown commands")
{
    mao_config *cfg = toy_config();
    CHECK(mao_run_command(cfg, "dance", nullptr, nullptr) == MAO_ERR_INVALID_ARGUMENT);
    CHECK(std::string(mao_last_error()).find("dance") != std::string::npos);
    mao_config_free(cfg);
}
