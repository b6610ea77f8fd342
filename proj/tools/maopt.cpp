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

// maopt command-line front end. All work goes through the C API in maopt.h;
// this file only parses arguments and reports status.

#include "maopt/maopt.h"

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct CommonOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;
};

void add_common(CLI::App *cmd, CommonOptions &o)
{
    cmd->add_option("--config", o.config, "flat key = value configuration file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", o.seed, "master seed, overrides the 'seed' key");
    cmd->add_option("--set", o.overrides, "extra key=value setting, applied after --config")->type_name("KEY=VALUE");
}

void print_line(const char *line, void *) { std::printf("%s\n", line); std::fflush(stdout); }

int fail(const char *what)
{
    std::fprintf(stderr, "maopt: %s: %s\n", what, mao_last_error());
    return 1;
}

int run(const std::string &command, const CommonOptions &o)
{
    mao_config *cfg = nullptr;
    mao_status st = o.config.empty() ? mao_config_create(&cfg) : mao_config_load(o.config.c_str(), &cfg);
    if (st != MAO_OK)
        return fail("config");
    for (const auto &kv : o.overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0) {
            std::fprintf(stderr, "maopt: --set expects KEY=VALUE, got '%s'\n", kv.c_str());
            mao_config_free(cfg);
            return 2;
        }
        if (mao_config_set(cfg, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()) != MAO_OK) {
            mao_config_free(cfg);
            return fail("--set");
        }
    }
    if (o.seed && mao_config_set_seed(cfg, *o.seed) != MAO_OK) {
        mao_config_free(cfg);
        return fail("--seed");
    }
    st = mao_run_command(cfg, command.c_str(), print_line, nullptr);
    mao_config_free(cfg);
    if (st != MAO_OK)
        return fail(command.c_str());
    return 0;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"maopt: joint antenna positioning and beamforming for movable-antenna arrays"};
    app.require_subcommand(1);
    app.set_version_flag("--version", mao_version());

    const std::vector<std::pair<std::string, std::string>> commands{
        {"gen-data", "generate channel samples and write the dataset file"},
        {"train", "train the positioning and beamforming networks"},
        {"eval", "evaluate a checkpoint on held-out channels"},
        {"bench", "sweep methods over P_max (and M) and write result tables"},
        {"oracle", "exhaustive position search on a dataset slice"},
        {"init", "write an untrained checkpoint"},
    };
    CommonOptions opts;
    for (const auto &[name, help] : commands)
        add_common(app.add_subcommand(name, help), opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        std::cerr << "maopt: " << e.what() << "\n\n" << app.help();
        return 2;
    }
    return run(app.get_subcommands().front()->get_name(), opts);
}
