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

#include "maopt/experiment.hpp"
#include "maopt/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

namespace maopt {

const std::vector<std::string> &all_methods()
{
    static const std::vector<std::string> m{"proposed", "random+wmmse", "strongest+wmmse", "strongest+zf", "oracle"};
    return m;
}

const std::set<std::string> &RunSettings::known_keys()
{
    static const std::set<std::string> keys{
        "seed", "wavelength", "region_side", "points_per_side", "paths", "ref_loss_db", "pathloss_exponent",
        "dist_min", "dist_max", "noise_dbm", "users", "min_spacing", "antennas", "antennas_list", "p_max_dbm", "p_max_dbm_list",
        "methods", "embed", "hidden", "heads", "encoder_layers", "clip", "bf_width", "bf_layers", "epochs",
        "steps_per_epoch", "batch", "learning_rate", "baseline", "eval_every", "clip_norm", "record_timing",
        "best_of_k", "oracle_budget", "count", "train_samples", "eval_samples", "bench_samples", "dataset",
        "train_dataset", "eval_dataset", "checkpoint", "curve", "output", "output_dir", "oracle_first",
        "oracle_count", "resume"};
    return keys;
}

namespace {

std::size_t get_count(const KeyValueConfig &c, const std::string &key, std::size_t fallback)
{
    const std::int64_t v = c.get_int(key, static_cast<std::int64_t>(fallback));
    if (v < 0)
        throw Error(Errc::invalid_argument, "config key '" + key + "' must be non-negative");
    return static_cast<std::size_t>(v);
}

} // namespace

RunSettings RunSettings::from_config(const KeyValueConfig &c, std::optional<std::uint64_t> seed_override)
{
    c.reject_unknown(known_keys());
    RunSettings s;
    ChannelGenConfig &ch = s.channel;
    ch.seed = seed_override.value_or(c.get_u64("seed", ch.seed));
    ch.wavelength = c.get_double("wavelength", ch.wavelength);
    ch.region_side = c.get_double("region_side", 2.0 * ch.wavelength);
    ch.points_per_side = static_cast<int>(c.get_int("points_per_side", ch.points_per_side));
    ch.paths = static_cast<int>(c.get_int("paths", ch.paths));
    ch.ref_loss_db = c.get_double("ref_loss_db", ch.ref_loss_db);
    ch.pathloss_exponent = c.get_double("pathloss_exponent", ch.pathloss_exponent);
    ch.dist_min = c.get_double("dist_min", ch.dist_min);
    ch.dist_max = c.get_double("dist_max", ch.dist_max);
    ch.noise_dbm = c.get_double("noise_dbm", ch.noise_dbm);
    ch.users = static_cast<int>(c.get_int("users", ch.users));
    ch.min_spacing = c.get_double("min_spacing", ch.min_spacing);
    ch.validate();

    s.antennas = get_count(c, "antennas", s.antennas);
    s.p_max_dbm = c.get_double("p_max_dbm", s.p_max_dbm);
    s.sweep_dbm = c.get_doubles("p_max_dbm_list", s.sweep_dbm);
    s.methods = c.get_strings("methods", s.methods);
    for (const auto &m : s.methods)
        if (std::find(all_methods().begin(), all_methods().end(), m) == all_methods().end())
            throw Error(Errc::invalid_argument, "config: unknown method '" + m + "'");
    if (s.methods.empty())
        throw Error(Errc::invalid_argument, "config: at least one method is required");
    if (s.sweep_dbm.empty())
        throw Error(Errc::invalid_argument, "config: p_max_dbm_list is empty");

    s.positioning.embed = get_count(c, "embed", s.positioning.embed);
    s.positioning.hidden = get_count(c, "hidden", s.positioning.hidden);
    s.positioning.heads = get_count(c, "heads", s.positioning.heads);
    s.positioning.layers = get_count(c, "encoder_layers", s.positioning.layers);
    s.positioning.clip = c.get_double("clip", s.positioning.clip);
    s.positioning.validate();
    s.beamforming.width = get_count(c, "bf_width", s.beamforming.width);
    s.beamforming.layers = get_count(c, "bf_layers", s.beamforming.layers);
    s.beamforming.validate();

    TrainConfig &t = s.train;
    t.epochs = get_count(c, "epochs", t.epochs);
    t.steps_per_epoch = get_count(c, "steps_per_epoch", t.steps_per_epoch);
    t.batch = get_count(c, "batch", t.batch);
    t.learning_rate = c.get_double("learning_rate", t.learning_rate);
    const std::string baseline = c.get_string("baseline", "none");
    if (baseline == "none")
        t.baseline = Baseline::none;
    else if (baseline == "batch-mean")
        t.baseline = Baseline::batch_mean;
    else
        throw Error(Errc::invalid_argument, "config: baseline must be 'none' or 'batch-mean', got '" + baseline + "'");
    t.eval_every = get_count(c, "eval_every", t.eval_every);
    t.clip_norm = c.get_double("clip_norm", t.clip_norm);
    s.record_timing = c.get_bool("record_timing", s.record_timing);
    t.record_timing = s.record_timing;
    t.seed = ch.seed;
    t.antennas = s.antennas;
    t.p_max = s.p_max_watts();
    t.validate();

    s.best_of_k = get_count(c, "best_of_k", s.best_of_k);
    s.oracle_budget = c.get_u64("oracle_budget", s.oracle_budget);
    s.resume = c.get_bool("resume", s.resume);
    s.count = get_count(c, "count", s.count);
    s.train_samples = get_count(c, "train_samples", s.train_samples);
    s.eval_samples = get_count(c, "eval_samples", s.eval_samples);
    s.bench_samples = get_count(c, "bench_samples", s.bench_samples);
    s.oracle_first = get_count(c, "oracle_first", s.oracle_first);
    s.oracle_count = get_count(c, "oracle_count", s.oracle_count);
    s.dataset = c.get_string("dataset", s.dataset);
    s.train_dataset = c.get_string("train_dataset", s.train_dataset);
    s.eval_dataset = c.get_string("eval_dataset", s.eval_dataset);
    s.checkpoint = c.get_string("checkpoint", s.checkpoint);
    s.curve = c.get_string("curve", s.curve);
    s.output = c.get_string("output", s.output);
    s.output_dir = c.get_string("output_dir", s.output_dir);
    const auto sites = static_cast<std::size_t>(ch.points_per_side * ch.points_per_side);
    if (s.antennas < 1 || s.antennas > sites)
        throw Error(Errc::invalid_argument, "config: antennas must be in [1, points_per_side^2]");
    s.sweep_antennas.clear();
    for (double v : c.get_doubles("antennas_list", {static_cast<double>(s.antennas)})) {
        if (!(v >= 1.0) || v != std::floor(v) || v > static_cast<double>(sites))
            throw Error(Errc::invalid_argument, "config: antennas_list entries must be integers in [1, points_per_side^2]");
        s.sweep_antennas.push_back(static_cast<std::size_t>(v));
    }
    if (std::find(s.methods.begin(), s.methods.end(), "oracle") != s.methods.end())
        for (std::size_t m : s.sweep_antennas)
            if (binomial(sites, m) > s.oracle_budget)
                throw Error(Errc::budget_exceeded, "config: method 'oracle' needs C(" + std::to_string(sites) + ", " +
                                                       std::to_string(m) + ") <= oracle_budget " +
                                                       std::to_string(s.oracle_budget));
    return s;
}

std::uint64_t eval_split_seed(std::uint64_t master) { return derive_seed(master, Stream::split, 1); }

Dataset make_train_set(const RunSettings &s)
{
    if (!s.train_dataset.empty())
        return load_dataset(s.train_dataset, s.channel.min_spacing);
    return generate_dataset(s.channel, s.train_samples);
}

Dataset make_eval_set(const RunSettings &s, std::size_t count)
{
    if (!s.eval_dataset.empty())
        return load_dataset(s.eval_dataset, s.channel.min_spacing);
    ChannelGenConfig c = s.channel;
    c.seed = eval_split_seed(s.channel.seed);
    return generate_dataset(c, count);
}

EvalMetrics evaluate_method(const std::string &method, const Dataset &data, std::size_t m, double p_max,
                            const Model *model, const RunSettings &s)
{
    if (method == "proposed") {
        if (!model)
            throw Error(Errc::invalid_argument, "method 'proposed' needs a trained checkpoint; run 'maopt train' first");
        return evaluate(*model, data, m, p_max, s.best_of_k, s.seed(), s.record_timing);
    }
    OracleConfig oc;
    oc.budget = s.oracle_budget;
    if (method == "oracle") {
        const std::uint64_t c = binomial(data.sites(), m);
        if (c > oc.budget)
            throw Error(Errc::budget_exceeded, "method 'oracle': C(" + std::to_string(data.sites()) + ", " +
                                                   std::to_string(m) + ") = " + std::to_string(c) +
                                                   " exceeds oracle_budget " + std::to_string(oc.budget));
    }
    EvalMetrics out;
    std::size_t feasible = 0;
    double total_ms = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const ChannelRealization &h = data.samples[i];
        const auto t0 = std::chrono::steady_clock::now();
        SelectionSet sel;
        BeamformerSet w;
        if (method == "oracle") {
            OracleResult r = exhaustive_oracle(h.h, *h.grid, m, p_max, h.noise, oc);
            sel = std::move(r.selection);
            w = std::move(r.w);
        } else {
            if (method == "random+wmmse") {
                Rng rng(derive_seed(s.seed(), Stream::baseline_random, i));
                sel = random_feasible_positioning(rng, *h.grid, m);
            } else if (method == "strongest+wmmse" || method == "strongest+zf") {
                sel = strongest_positioning(h.h, *h.grid, m);
            } else {
                throw Error(Errc::invalid_argument, "unknown method '" + method + "'");
            }
            const Eigen::MatrixXcd hs = select_channel(sel, h.h);
            w = method == "strongest+zf" ? zero_forcing(hs, p_max) : wmmse(hs, p_max, h.noise).w;
        }
        const double rate = compute_rates(select_channel(sel, h.h), w, h.noise).sum_rate;
        total_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        out.rates.push_back(rate);
        if (check_feasibility(sel, *h.grid, m) && w.within_budget(p_max))
            ++feasible;
    }
    summarize(out);
    if (data.size() > 0) {
        out.feasibility = static_cast<double>(feasible) / static_cast<double>(data.size());
        out.mean_ms = s.record_timing ? total_ms / static_cast<double>(data.size()) : 0.0;
    }
    return out;
}

std::vector<ResultRow> run_experiment(const RunSettings &s, const Dataset &data, const Model *model)
{
    if (std::find(s.methods.begin(), s.methods.end(), "proposed") != s.methods.end() && !model)
        throw Error(Errc::invalid_argument, "method 'proposed' needs a trained checkpoint; run 'maopt train' first");
    std::vector<ResultRow> rows;
    const std::vector<std::size_t> ms = s.sweep_antennas.empty() ? std::vector<std::size_t>{s.antennas}
                                                                  : s.sweep_antennas;
    for (std::size_t m : ms)
        for (double dbm : s.sweep_dbm)
            for (const auto &method : s.methods) {
                const EvalMetrics e = evaluate_method(method, data, m, dbm_to_watts(dbm), model, s);
                ResultRow r;
                r.method = method;
                r.n = data.sites();
                r.m = m;
                r.k = data.users();
                r.p_max_dbm = dbm;
                r.mean_sum_rate = e.mean_sum_rate;
                r.std = e.std_sum_rate;
                r.feasibility = e.feasibility;
                r.mean_ms = e.mean_ms;
                rows.push_back(r);
            }
    return rows;
}

void write_results_csv(const std::filesystem::path &path, const std::vector<ResultRow> &rows)
{
    std::ofstream os(path, std::ios::trunc);
    if (!os)
        throw Error(Errc::io, "results: cannot open '" + path.string() + "' for writing");
    os << "method,N,M,K,P_max_dBm,mean_sum_rate,std,feasibility,mean_ms\n";
    for (const auto &r : rows)
        os << r.method << ',' << r.n << ',' << r.m << ',' << r.k << ',' << format_double(r.p_max_dbm) << ','
           << format_double(r.mean_sum_rate) << ',' << format_double(r.std) << ',' << format_double(r.feasibility)
           << ',' << format_double(r.mean_ms) << '\n';
    if (!os)
        throw Error(Errc::io, "results: write to '" + path.string() + "' failed");
}

void write_plot_csv(const std::filesystem::path &path, const std::vector<ResultRow> &rows, bool timing)
{
    std::ofstream os(path, std::ios::trunc);
    if (!os)
        throw Error(Errc::io, "plot data: cannot open '" + path.string() + "' for writing");
    // With several array sizes in one table the series name carries M.
    bool several_m = false;
    for (const auto &r : rows)
        several_m = several_m || r.m != rows.front().m;
    os << "x,series,y\n";
    for (const auto &r : rows)
        os << format_double(r.p_max_dbm) << ',' << r.method << (several_m ? " M=" + std::to_string(r.m) : "") << ','
           << format_double(timing ? r.mean_ms : r.mean_sum_rate) << '\n';
    if (!os)
        throw Error(Errc::io, "plot data: write to '" + path.string() + "' failed");
}

} // namespace maopt
