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
#include "maopt/error.hpp"
#include "maopt/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <new>
#include <optional>
#include <string>

struct mao_config {
    maopt::KeyValueConfig values;
    std::optional<std::uint64_t> seed;

    maopt::RunSettings resolve() const { return maopt::RunSettings::from_config(values, seed); }
};

struct mao_dataset {
    maopt::Dataset data;
};

struct mao_model {
    maopt::Model model;
};

namespace {

thread_local std::string g_last_error;

mao_status status_of(maopt::Errc e)
{
    switch (e) {
    case maopt::Errc::invalid_argument: return MAO_ERR_INVALID_ARGUMENT;
    case maopt::Errc::shape_mismatch: return MAO_ERR_SHAPE;
    case maopt::Errc::infeasible: return MAO_ERR_INFEASIBLE;
    case maopt::Errc::numeric: return MAO_ERR_NUMERIC;
    case maopt::Errc::budget_exceeded: return MAO_ERR_BUDGET;
    case maopt::Errc::io: return MAO_ERR_IO;
    }
    return MAO_ERR_INTERNAL;
}

template <class F>
mao_status guarded(F &&f)
{
    try {
        f();
        g_last_error.clear();
        return MAO_OK;
    } catch (const maopt::Error &e) {
        g_last_error = e.what();
        return status_of(e.code());
    } catch (const std::bad_alloc &) {
        g_last_error = "out of memory";
        return MAO_ERR_INTERNAL;
    } catch (const std::exception &e) {
        g_last_error = e.what();
        return MAO_ERR_INTERNAL;
    }
}

void require(const void *p, const char *what)
{
    if (p == nullptr)
        throw maopt::Error(maopt::Errc::invalid_argument, std::string(what) + " must not be NULL");
}

void emit(mao_log_fn log, void *user, const std::string &line)
{
    if (log)
        log(line.c_str(), user);
}

maopt::Model load_checkpoint(const std::string &path)
{
    if (!std::filesystem::exists(path))
        throw maopt::Error(maopt::Errc::io,
                           "checkpoint '" + path + "' not found; run 'maopt train' (or 'maopt init') first");
    return maopt::load_model(path);
}

maopt::ResultRow row_of(const std::string &method, const maopt::Dataset &d, const maopt::RunSettings &s,
                        const maopt::EvalMetrics &e)
{
    maopt::ResultRow r;
    r.method = method;
    r.n = d.sites();
    r.m = s.antennas;
    r.k = d.users();
    r.p_max_dbm = s.p_max_dbm;
    r.mean_sum_rate = e.mean_sum_rate;
    r.std = e.std_sum_rate;
    r.feasibility = e.feasibility;
    r.mean_ms = e.mean_ms;
    return r;
}

void fill_metrics(const maopt::EvalMetrics &e, mao_eval_metrics *out)
{
    if (!out)
        return;
    out->mean_sum_rate = e.mean_sum_rate;
    out->median_sum_rate = e.median_sum_rate;
    out->std_sum_rate = e.std_sum_rate;
    out->feasibility = e.feasibility;
    out->mean_ms = e.mean_ms;
    out->has_best_of_k = e.best_of_k_mean.has_value() ? 1 : 0;
    out->best_of_k_mean = e.best_of_k_mean.value_or(0.0);
}

void check_geometry(const maopt::Dataset &d, const maopt::RunSettings &s)
{
    if (d.size() == 0)
        throw maopt::Error(maopt::Errc::invalid_argument, "dataset is empty");
    if (s.antennas > d.sites())
        throw maopt::Error(maopt::Errc::invalid_argument, "antennas (" + std::to_string(s.antennas) +
                                                              ") exceed the dataset's " +
                                                              std::to_string(d.sites()) + " sampling points");
}

void train_impl(const maopt::RunSettings &s, maopt::Model &model, const maopt::Dataset &train,
                const maopt::Dataset *eval, const char *checkpoint, const char *curve, mao_log_fn log, void *user)
{
    check_geometry(train, s);
    maopt::TrainOutputs out;
    if (checkpoint)
        out.checkpoint = checkpoint;
    if (curve)
        out.curve_csv = curve;
    const std::size_t every = s.train.eval_every > 0 ? s.train.eval_every : s.train.steps_per_epoch;
    out.on_step = [&](const maopt::CurvePoint &p) {
        if (p.step % static_cast<std::int64_t>(every) != 0 && !p.eval_reward)
            return;
        std::string line = "step " + std::to_string(p.step) + " mean_reward " + maopt::format_double(p.mean_reward);
        if (p.eval_reward)
            line += " eval_reward " + maopt::format_double(*p.eval_reward);
        emit(log, user, line);
    };
    maopt::train_loop(model, s.train, train, eval, out);
}

void oracle_impl(const maopt::RunSettings &s, const maopt::Dataset &d, std::size_t first, std::size_t count,
                 const std::string &csv, mao_log_fn log, void *user)
{
    check_geometry(d, s);
    if (first + count > d.size())
        throw maopt::Error(maopt::Errc::invalid_argument, "oracle: slice [" + std::to_string(first) + ", " +
                                                              std::to_string(first + count) +
                                                              ") exceeds the dataset size " +
                                                              std::to_string(d.size()));
    std::ofstream os(csv, std::ios::trunc);
    if (!os)
        throw maopt::Error(maopt::Errc::io, "oracle: cannot open '" + csv + "' for writing");
    os << "sample,selection,sum_rate,feasible_subsets\n";
    maopt::OracleConfig oc;
    oc.budget = s.oracle_budget;
    for (std::size_t i = first; i < first + count; ++i) {
        const auto &h = d.samples[i];
        const auto r = maopt::exhaustive_oracle(h.h, *h.grid, s.antennas, s.p_max_watts(), h.noise, oc);
        std::string sel;
        for (std::size_t j = 0; j < r.selection.size(); ++j)
            sel += (j ? " " : "") + std::to_string(r.selection[j]);
        os << i << ',' << sel << ',' << maopt::format_double(r.rates.sum_rate) << ',' << r.feasible_subsets << '\n';
        emit(log, user, "sample " + std::to_string(i) + " oracle sum rate " + maopt::format_double(r.rates.sum_rate));
    }
    if (!os)
        throw maopt::Error(maopt::Errc::io, "oracle: write to '" + csv + "' failed");
}

} // namespace

extern "C" {

const char *mao_version(void) { return "1.0.0"; }

const char *mao_last_error(void) { return g_last_error.c_str(); }

const char *mao_status_name(mao_status s)
{
    switch (s) {
    case MAO_OK: return "ok";
    case MAO_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MAO_ERR_SHAPE: return "shape mismatch";
    case MAO_ERR_INFEASIBLE: return "infeasible";
    case MAO_ERR_NUMERIC: return "numeric error";
    case MAO_ERR_BUDGET: return "budget exceeded";
    case MAO_ERR_IO: return "i/o error";
    case MAO_ERR_INTERNAL: return "internal error";
    }
    return "unknown status";
}

mao_status mao_config_create(mao_config **out)
{
    return guarded([&] {
        require(out, "out");
        *out = new mao_config();
    });
}

mao_status mao_config_load(const char *path, mao_config **out)
{
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        auto c = std::make_unique<mao_config>();
        c->values = maopt::KeyValueConfig::load(path);
        *out = c.release();
    });
}

mao_status mao_config_set(mao_config *cfg, const char *key, const char *value)
{
    return guarded([&] {
        require(cfg, "config");
        require(key, "key");
        require(value, "value");
        if (!maopt::RunSettings::known_keys().count(key))
            throw maopt::Error(maopt::Errc::invalid_argument, std::string("unknown config key '") + key + "'");
        cfg->values.set(key, value);
    });
}

mao_status mao_config_set_seed(mao_config *cfg, uint64_t seed)
{
    return guarded([&] {
        require(cfg, "config");
        cfg->seed = seed;
    });
}

mao_status mao_config_validate(const mao_config *cfg)
{
    return guarded([&] {
        require(cfg, "config");
        (void)cfg->resolve();
    });
}

void mao_config_free(mao_config *cfg) { delete cfg; }

mao_status mao_dataset_generate(const mao_config *cfg, size_t count, mao_split split, mao_dataset **out)
{
    return guarded([&] {
        require(cfg, "config");
        require(out, "out");
        const maopt::RunSettings s = cfg->resolve();
        maopt::ChannelGenConfig c = s.channel;
        if (split == MAO_SPLIT_EVAL)
            c.seed = maopt::eval_split_seed(s.seed());
        else if (split != MAO_SPLIT_TRAIN)
            throw maopt::Error(maopt::Errc::invalid_argument, "unknown dataset split");
        auto d = std::make_unique<mao_dataset>();
        d->data = maopt::generate_dataset(c, count);
        *out = d.release();
    });
}

mao_status mao_dataset_load(const mao_config *cfg, const char *path, mao_dataset **out)
{
    return guarded([&] {
        require(cfg, "config");
        require(path, "path");
        require(out, "out");
        auto d = std::make_unique<mao_dataset>();
        d->data = maopt::load_dataset(path, cfg->resolve().channel.min_spacing);
        *out = d.release();
    });
}

mao_status mao_dataset_save(const mao_dataset *data, const char *path)
{
    return guarded([&] {
        require(data, "dataset");
        require(path, "path");
        maopt::save_dataset(path, data->data);
    });
}

mao_status mao_dataset_info(const mao_dataset *data, size_t *count, size_t *sites, size_t *users)
{
    return guarded([&] {
        require(data, "dataset");
        if (count)
            *count = data->data.size();
        if (sites)
            *sites = data->data.sites();
        if (users)
            *users = data->data.users();
    });
}

mao_status mao_dataset_channel(const mao_dataset *data, size_t index, double *out, size_t out_len)
{
    return guarded([&] {
        require(data, "dataset");
        require(out, "out");
        if (index >= data->data.size())
            throw maopt::Error(maopt::Errc::invalid_argument, "sample index out of range");
        const auto &h = data->data.samples[index].h;
        const auto needed = static_cast<std::size_t>(2 * h.rows() * h.cols());
        if (out_len < needed)
            throw maopt::Error(maopt::Errc::shape_mismatch,
                               "output buffer holds " + std::to_string(out_len) + " values, need " +
                                   std::to_string(needed));
        std::size_t j = 0;
        for (Eigen::Index n = 0; n < h.rows(); ++n)
            for (Eigen::Index k = 0; k < h.cols(); ++k) {
                out[j++] = h(n, k).real();
                out[j++] = h(n, k).imag();
            }
    });
}

void mao_dataset_free(mao_dataset *data) { delete data; }

mao_status mao_model_create(const mao_config *cfg, mao_model **out)
{
    return guarded([&] {
        require(cfg, "config");
        require(out, "out");
        const maopt::RunSettings s = cfg->resolve();
        auto m = std::make_unique<mao_model>();
        m->model = maopt::Model::create(s.positioning, s.beamforming, s.channel.wavelength, s.seed());
        *out = m.release();
    });
}

mao_status mao_model_load(const char *path, mao_model **out)
{
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        auto m = std::make_unique<mao_model>();
        m->model = load_checkpoint(path);
        *out = m.release();
    });
}

mao_status mao_model_save(const mao_model *model, const char *path)
{
    return guarded([&] {
        require(model, "model");
        require(path, "path");
        maopt::save_model(path, model->model);
    });
}

mao_status mao_model_step(const mao_model *model, int64_t *step)
{
    return guarded([&] {
        require(model, "model");
        require(step, "step");
        *step = model->model.step;
    });
}

void mao_model_free(mao_model *model) { delete model; }

mao_status mao_train(const mao_config *cfg, mao_model *model, const mao_dataset *train, const mao_dataset *eval,
                     const char *checkpoint, const char *curve_csv, mao_log_fn log, void *user)
{
    return guarded([&] {
        require(cfg, "config");
        require(model, "model");
        require(train, "training dataset");
        const maopt::RunSettings s = cfg->resolve();
        train_impl(s, model->model, train->data, eval ? &eval->data : nullptr, checkpoint, curve_csv, log, user);
    });
}

mao_status mao_evaluate(const mao_config *cfg, const mao_model *model, const char *method, const mao_dataset *data,
                        const char *csv_path, mao_eval_metrics *out)
{
    return guarded([&] {
        require(cfg, "config");
        require(method, "method");
        require(data, "dataset");
        const maopt::RunSettings s = cfg->resolve();
        check_geometry(data->data, s);
        const maopt::EvalMetrics e = maopt::evaluate_method(method, data->data, s.antennas, s.p_max_watts(),
                                                            model ? &model->model : nullptr, s);
        if (csv_path)
            maopt::write_results_csv(csv_path, {row_of(method, data->data, s, e)});
        fill_metrics(e, out);
    });
}

mao_status mao_bench(const mao_config *cfg, const mao_model *model, const mao_dataset *data, const char *output_dir)
{
    return guarded([&] {
        require(cfg, "config");
        require(data, "dataset");
        require(output_dir, "output directory");
        const maopt::RunSettings s = cfg->resolve();
        check_geometry(data->data, s);
        const auto rows = maopt::run_experiment(s, data->data, model ? &model->model : nullptr);
        const std::filesystem::path dir(output_dir);
        std::filesystem::create_directories(dir);
        maopt::write_results_csv(dir / "results.csv", rows);
        maopt::write_plot_csv(dir / "plot_sum_rate.csv", rows, false);
        maopt::write_plot_csv(dir / "plot_time.csv", rows, true);
    });
}

mao_status mao_oracle(const mao_config *cfg, const mao_dataset *data, size_t first, size_t count,
                      const char *csv_path, mao_log_fn log, void *user)
{
    return guarded([&] {
        require(cfg, "config");
        require(data, "dataset");
        require(csv_path, "csv path");
        oracle_impl(cfg->resolve(), data->data, first, count, csv_path, log, user);
    });
}

mao_status mao_run_command(const mao_config *cfg, const char *command, mao_log_fn log, void *user)
{
    return guarded([&] {
        require(cfg, "config");
        require(command, "command");
        const maopt::RunSettings s = cfg->resolve();
        const std::string cmd = command;
        if (cmd == "gen-data") {
            const maopt::Dataset d = maopt::generate_dataset(s.channel, s.count);
            maopt::save_dataset(s.dataset, d);
            emit(log, user, "wrote " + std::to_string(d.size()) + " samples (N=" + std::to_string(d.sites()) +
                                ", K=" + std::to_string(d.users()) + ") to " + s.dataset);
        } else if (cmd == "init") {
            const auto m = maopt::Model::create(s.positioning, s.beamforming, s.channel.wavelength, s.seed());
            maopt::save_model(s.checkpoint, m);
            emit(log, user, "wrote untrained model to " + s.checkpoint);
        } else if (cmd == "train") {
            maopt::Model m = s.resume && std::filesystem::exists(s.checkpoint)
                                 ? maopt::load_model(s.checkpoint)
                                 : maopt::Model::create(s.positioning, s.beamforming, s.channel.wavelength, s.seed());
            const maopt::Dataset train = maopt::make_train_set(s);
            std::optional<maopt::Dataset> eval;
            if (s.eval_samples > 0 || !s.eval_dataset.empty())
                eval = maopt::make_eval_set(s, s.eval_samples);
            train_impl(s, m, train, eval ? &*eval : nullptr, s.checkpoint.c_str(), s.curve.c_str(), log, user);
            maopt::save_model(s.checkpoint, m);
            emit(log, user, "wrote checkpoint " + s.checkpoint + " and curve " + s.curve);
        } else if (cmd == "eval") {
            const maopt::Model m = load_checkpoint(s.checkpoint);
            const maopt::Dataset d = maopt::make_eval_set(s, s.eval_samples);
            check_geometry(d, s);
            const auto e = maopt::evaluate_method("proposed", d, s.antennas, s.p_max_watts(), &m, s);
            maopt::write_results_csv(s.output, {row_of("proposed", d, s, e)});
            std::string line = "mean_sum_rate " + maopt::format_double(e.mean_sum_rate) + " median " +
                               maopt::format_double(e.median_sum_rate) + " feasibility " +
                               maopt::format_double(e.feasibility) + " mean_ms " + maopt::format_double(e.mean_ms);
            if (e.best_of_k_mean)
                line += " best_of_k_mean " + maopt::format_double(*e.best_of_k_mean);
            emit(log, user, line);
        } else if (cmd == "bench") {
            const maopt::Dataset d = maopt::make_eval_set(s, s.bench_samples);
            check_geometry(d, s);
            std::optional<maopt::Model> m;
            for (const auto &method : s.methods)
                if (method == "proposed")
                    m = load_checkpoint(s.checkpoint);
            const auto rows = maopt::run_experiment(s, d, m ? &*m : nullptr);
            const std::filesystem::path dir(s.output_dir);
            std::filesystem::create_directories(dir);
            maopt::write_results_csv(dir / "results.csv", rows);
            maopt::write_plot_csv(dir / "plot_sum_rate.csv", rows, false);
            maopt::write_plot_csv(dir / "plot_time.csv", rows, true);
            for (const auto &r : rows)
                emit(log, user, r.method + " P_max " + maopt::format_double(r.p_max_dbm) + " dBm: sum rate " +
                                    maopt::format_double(r.mean_sum_rate) + ", " + maopt::format_double(r.mean_ms) +
                                    " ms");
        } else if (cmd == "oracle") {
            const maopt::Dataset d = std::filesystem::exists(s.dataset)
                                         ? maopt::load_dataset(s.dataset, s.channel.min_spacing)
                                         : maopt::make_eval_set(s, s.oracle_first + s.oracle_count);
            oracle_impl(s, d, s.oracle_first, s.oracle_count, s.output, log, user);
        } else {
            throw maopt::Error(maopt::Errc::invalid_argument, "unknown command '" + cmd + "'");
        }
    });
}

} // extern "C"
