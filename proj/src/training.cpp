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

#include "maopt/training.hpp"
#include "maopt/checkpoint.hpp"
#include "maopt/config.hpp"
#include "maopt/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

namespace maopt {

using ad::GradientBuffer;
using ad::Shape;
using ad::Tape;
using ad::Tensor;
using ad::Var;

Model Model::create(const PositioningConfig &p, const BeamformingConfig &w, double wavelength, std::uint64_t seed)
{
    if (!(wavelength > 0.0))
        throw Error(Errc::invalid_argument, "model: wavelength must be positive");
    Model m;
    m.positioning = p;
    m.beamforming = w;
    m.wavelength = wavelength;
    Rng rp(derive_seed(seed, Stream::weights, 0));
    Rng rw(derive_seed(seed, Stream::weights, 1));
    m.pnet = PositioningNet::create(m.theta_p, p, rp);
    m.bnet = BeamformingNet::create(m.theta_w, w, rw);
    return m;
}

namespace {

void append_store(std::vector<NamedTensor> &out, const ad::ParameterStore &store)
{
    for (const auto &p : store)
        out.push_back({p.name, p.value});
}

void append_adam(std::vector<NamedTensor> &out, const ad::ParameterStore &store)
{
    for (const auto &p : store) {
        out.push_back({"adam.m." + p.name, p.first_moment});
        out.push_back({"adam.v." + p.name, p.second_moment});
        out.push_back({"adam.t." + p.name, Tensor::scalar(static_cast<double>(p.step))});
    }
}

void restore_store(ad::ParameterStore &store, const std::map<std::string, const Tensor *> &by_name,
                   const std::string &path)
{
    auto fetch = [&](const std::string &name, const Shape &shape) -> const Tensor & {
        auto it = by_name.find(name);
        if (it == by_name.end())
            throw Error(Errc::io, "checkpoint '" + path + "': missing entry '" + name + "'");
        if (it->second->shape() != shape)
            throw Error(Errc::io, "checkpoint '" + path + "': entry '" + name + "' has shape " +
                                      ad::shape_string(it->second->shape()) + ", expected " +
                                      ad::shape_string(shape));
        return *it->second;
    };
    for (auto &p : store) {
        p.value = fetch(p.name, p.value.shape());
        p.first_moment = fetch("adam.m." + p.name, p.value.shape());
        p.second_moment = fetch("adam.v." + p.name, p.value.shape());
        p.step = static_cast<std::int64_t>(fetch("adam.t." + p.name, Shape{}).item());
        p.grad.fill(0.0);
    }
}

} // namespace

void save_model(const std::filesystem::path &path, const Model &model)
{
    std::vector<NamedTensor> e;
    auto meta = [&](const char *name, double v) { e.push_back({std::string("meta.") + name, Tensor::scalar(v)}); };
    meta("embed", static_cast<double>(model.positioning.embed));
    meta("hidden", static_cast<double>(model.positioning.hidden));
    meta("heads", static_cast<double>(model.positioning.heads));
    meta("encoder_layers", static_cast<double>(model.positioning.layers));
    meta("clip", model.positioning.clip);
    meta("bf_width", static_cast<double>(model.beamforming.width));
    meta("bf_layers", static_cast<double>(model.beamforming.layers));
    meta("wavelength", model.wavelength);
    meta("step", static_cast<double>(model.step));
    append_store(e, model.theta_p);
    append_store(e, model.theta_w);
    append_adam(e, model.theta_p);
    append_adam(e, model.theta_w);
    save_tensors(path, e);
}

Model load_model(const std::filesystem::path &path)
{
    const std::vector<NamedTensor> entries = load_tensors(path);
    std::map<std::string, const Tensor *> by_name;
    for (const auto &e : entries)
        by_name[e.name] = &e.tensor;
    auto meta = [&](const char *name) {
        auto it = by_name.find(std::string("meta.") + name);
        if (it == by_name.end() || it->second->size() != 1)
            throw Error(Errc::io, "checkpoint '" + path.string() + "': missing meta." + name);
        return it->second->item();
    };
    auto count = [&](const char *name) { return static_cast<std::size_t>(meta(name)); };
    PositioningConfig p;
    p.embed = count("embed");
    p.hidden = count("hidden");
    p.heads = count("heads");
    p.layers = count("encoder_layers");
    p.clip = meta("clip");
    BeamformingConfig w;
    w.width = count("bf_width");
    w.layers = count("bf_layers");
    Model m = Model::create(p, w, meta("wavelength"), 0);
    m.step = static_cast<std::int64_t>(meta("step"));
    restore_store(m.theta_p, by_name, path.string());
    restore_store(m.theta_w, by_name, path.string());
    return m;
}

void TrainConfig::validate() const
{
    if (epochs < 1 || steps_per_epoch < 1 || batch < 1)
        throw Error(Errc::invalid_argument, "train config: epochs, steps per epoch and batch must be >= 1");
    if (!(learning_rate >= 0.0))
        throw Error(Errc::invalid_argument, "train config: learning rate must be non-negative");
    if (!(p_max > 0.0))
        throw Error(Errc::invalid_argument, "train config: power budget must be positive");
    if (antennas < 1)
        throw Error(Errc::invalid_argument, "train config: M must be >= 1");
    if (!(clip_norm > 0.0))
        throw Error(Errc::invalid_argument, "train config: clip norm must be positive");
}

std::vector<RolloutSample> rollout_batch(const Model &model, const std::vector<const ChannelRealization *> &batch,
                                         std::size_t m, double p_max, std::uint64_t seed, std::uint64_t step)
{
    std::vector<RolloutSample> out;
    out.reserve(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const ChannelRealization &h = *batch[i];
        Rng rng(derive_seed(seed, Stream::rollout, step, i));
        RolloutSample s;
        s.trace = model.pnet.rollout(model.theta_p, make_features(h, p_max, model.wavelength), *h.grid, m,
                                     DecodeMode::sample, &rng);
        const Eigen::MatrixXcd hs = select_channel(s.trace.choices, h.h);
        s.w = model.bnet.infer(model.theta_w, hs, h.noise, p_max).second;
        s.reward = compute_rates(hs, s.w, h.noise).sum_rate;
        out.push_back(std::move(s));
    }
    return out;
}

namespace {

double baseline_value(const std::vector<double> &rewards, Baseline mode)
{
    if (mode == Baseline::none || rewards.empty())
        return 0.0;
    return std::accumulate(rewards.begin(), rewards.end(), 0.0) / static_cast<double>(rewards.size());
}

} // namespace

GradientBuffer positioning_gradient(const Model &model, const std::vector<const ChannelRealization *> &batch,
                                    const std::vector<RolloutSample> &results, double p_max, Baseline baseline)
{
    if (batch.size() != results.size())
        throw Error(Errc::shape_mismatch, "positioning gradient: batch and results differ in length");
    std::vector<double> rewards;
    for (const auto &r : results)
        rewards.push_back(r.reward);
    const double b = baseline_value(rewards, baseline);
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    GradientBuffer g(model.theta_p);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const ChannelRealization &h = *batch[i];
        Tape tape;
        auto enc = model.pnet.prepare(tape, model.theta_p, make_features(h, p_max, model.wavelength));
        Var lp = model.pnet.log_prob_of(tape, model.theta_p, enc, *h.grid, results[i].trace.choices);
        tape.backward(lp);
        tape.accumulate_into(g, model.theta_p, (rewards[i] - b) * inv_b);
    }
    return g;
}

GradientBuffer beamforming_gradient(const Model &model, const std::vector<const ChannelRealization *> &batch,
                                    const std::vector<RolloutSample> &results, double p_max)
{
    if (batch.size() != results.size())
        throw Error(Errc::shape_mismatch, "beamforming gradient: batch and results differ in length");
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    GradientBuffer g(model.theta_w);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const ChannelRealization &h = *batch[i];
        Tape tape;
        const Eigen::MatrixXcd hs = select_channel(results[i].trace.choices, h.h);
        auto out = model.bnet.forward(tape, model.theta_w, hs, h.noise, p_max);
        tape.backward(out.sum_rate);
        tape.accumulate_into(g, model.theta_w, inv_b);
    }
    return g;
}

FusedGradients fused_gradients(const Model &model, const std::vector<const ChannelRealization *> &batch,
                               const TrainConfig &cfg, std::uint64_t step)
{
    if (batch.empty())
        throw Error(Errc::invalid_argument, "train step: empty batch");
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    FusedGradients f;
    f.grad_p = GradientBuffer(model.theta_p);
    f.grad_w = GradientBuffer(model.theta_w);
    GradientBuffer weighted(model.theta_p);  // sum_i R_i grad log p_i
    GradientBuffer plain(model.theta_p);     // sum_i grad log p_i
    std::vector<double> rewards;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const ChannelRealization &h = *batch[i];
        Rng rng(derive_seed(cfg.seed, Stream::rollout, step, i));
        Tape tp;
        auto enc = model.pnet.prepare(tp, model.theta_p, make_features(h, cfg.p_max, model.wavelength));
        auto roll = model.pnet.rollout(tp, model.theta_p, enc, *h.grid, cfg.antennas, DecodeMode::sample, &rng);

        Tape tw;
        const Eigen::MatrixXcd hs = select_channel(roll.trace.choices, h.h);
        auto out = model.bnet.forward(tw, model.theta_w, hs, h.noise, cfg.p_max);
        const double reward = out.sum_rate.value()[0];
        tw.backward(out.sum_rate);
        tw.accumulate_into(f.grad_w, model.theta_w, inv_b);

        tp.backward(roll.log_prob);
        tp.accumulate_into(weighted, model.theta_p, reward);
        tp.accumulate_into(plain, model.theta_p, 1.0);

        rewards.push_back(reward);
        f.metrics.mean_log_prob += roll.trace.total_log_prob * inv_b;
        RolloutSample s;
        s.trace = std::move(roll.trace);
        s.w = unstack_beamformer(out.w.value());
        s.reward = reward;
        f.samples.push_back(std::move(s));
    }
    const double b = baseline_value(rewards, cfg.baseline);
    f.grad_p.axpy(inv_b, weighted);
    if (b != 0.0)
        f.grad_p.axpy(-b * inv_b, plain);
    f.metrics.mean_reward = std::accumulate(rewards.begin(), rewards.end(), 0.0) * inv_b;
    f.metrics.grad_norm_p = f.grad_p.norm();
    f.metrics.grad_norm_w = f.grad_w.norm();
    return f;
}

namespace {

void check_finite(const GradientBuffer &g, const ad::ParameterStore &store)
{
    for (std::size_t i = 0; i < g.size(); ++i)
        if (!g[i].all_finite())
            throw Error(Errc::numeric, "train step: non-finite gradient in parameter '" + store[i].name + "'");
}

void ascend(ad::ParameterStore &store, const GradientBuffer &g, const TrainConfig &cfg)
{
    store.zero_grad();
    g.add_to(store, -1.0);  // Adam descends; the objective is maximised
    const double norm = store.grad_norm();
    if (norm > cfg.clip_norm)
        store.scale_grad(cfg.clip_norm / norm);
    ad::AdamConfig adam;
    adam.learning_rate = cfg.learning_rate;
    ad::adam_step(store, adam);
}

} // namespace

StepMetrics train_step(Model &model, const std::vector<const ChannelRealization *> &batch, const TrainConfig &cfg)
{
    cfg.validate();
    FusedGradients f = fused_gradients(model, batch, cfg, static_cast<std::uint64_t>(model.step));
    check_finite(f.grad_w, model.theta_w);
    check_finite(f.grad_p, model.theta_p);
    ascend(model.theta_w, f.grad_w, cfg);
    ascend(model.theta_p, f.grad_p, cfg);
    ++model.step;
    return f.metrics;
}

namespace {

std::vector<std::size_t> epoch_order(std::size_t size, std::uint64_t seed, std::uint64_t epoch)
{
    std::vector<std::size_t> order(size);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, Stream::batch, epoch));
    for (std::size_t i = size; i > 1; --i)
        std::swap(order[i - 1], order[static_cast<std::size_t>(rng.uniform_index(i))]);
    return order;
}

} // namespace

std::vector<CurvePoint> train_loop(Model &model, const TrainConfig &cfg, const Dataset &train, const Dataset *eval,
                                   const TrainOutputs &out)
{
    cfg.validate();
    if (train.size() == 0)
        throw Error(Errc::invalid_argument, "train: empty training set");
    const auto total = static_cast<std::int64_t>(cfg.epochs * cfg.steps_per_epoch);
    const auto start = std::chrono::steady_clock::now();
    std::vector<CurvePoint> curve;
    std::vector<std::size_t> order;
    std::int64_t order_epoch = -1;
    while (model.step < total) {
        const auto step = static_cast<std::uint64_t>(model.step);
        const std::uint64_t epoch = step / cfg.steps_per_epoch;
        if (static_cast<std::int64_t>(epoch) != order_epoch) {
            order = epoch_order(train.size(), cfg.seed, epoch);
            order_epoch = static_cast<std::int64_t>(epoch);
        }
        const std::size_t offset = (step % cfg.steps_per_epoch) * cfg.batch;
        std::vector<const ChannelRealization *> batch(cfg.batch);
        for (std::size_t b = 0; b < cfg.batch; ++b)
            batch[b] = &train.samples[order[(offset + b) % train.size()]];

        StepMetrics sm = train_step(model, batch, cfg);
        CurvePoint pt;
        pt.step = model.step;
        pt.mean_reward = sm.mean_reward;
        pt.grad_norm_p = sm.grad_norm_p;
        pt.grad_norm_w = sm.grad_norm_w;
        const bool last = model.step == total;
        if (eval && eval->size() > 0 &&
            ((cfg.eval_every > 0 && model.step % static_cast<std::int64_t>(cfg.eval_every) == 0) || last))
            pt.eval_reward = evaluate(model, *eval, cfg.antennas, cfg.p_max, 0, cfg.seed, false).mean_sum_rate;
        if (cfg.record_timing)
            pt.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
        curve.push_back(pt);
        if (out.on_step)
            out.on_step(pt);
        if (out.checkpoint && (model.step % static_cast<std::int64_t>(cfg.steps_per_epoch) == 0 || last))
            save_model(*out.checkpoint, model);
    }
    if (out.curve_csv)
        write_curve_csv(*out.curve_csv, curve);
    return curve;
}

void write_curve_csv(const std::filesystem::path &path, const std::vector<CurvePoint> &curve)
{
    std::ofstream os(path, std::ios::trunc);
    if (!os)
        throw Error(Errc::io, "curve: cannot open '" + path.string() + "' for writing");
    os << "step,mean_reward,eval_reward,grad_norm_p,grad_norm_w,wall_ms\n";
    for (const auto &p : curve)
        os << p.step << ',' << format_double(p.mean_reward) << ','
           << (p.eval_reward ? format_double(*p.eval_reward) : std::string()) << ',' << format_double(p.grad_norm_p)
           << ',' << format_double(p.grad_norm_w) << ',' << format_double(p.wall_ms) << '\n';
    if (!os)
        throw Error(Errc::io, "curve: write to '" + path.string() + "' failed");
}

void summarize(EvalMetrics &m)
{
    const std::size_t n = m.rates.size();
    if (n == 0)
        return;
    m.mean_sum_rate = std::accumulate(m.rates.begin(), m.rates.end(), 0.0) / static_cast<double>(n);
    std::vector<double> sorted = m.rates;
    std::sort(sorted.begin(), sorted.end());
    m.median_sum_rate = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    double ss = 0.0;
    for (double r : m.rates)
        ss += (r - m.mean_sum_rate) * (r - m.mean_sum_rate);
    m.std_sum_rate = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
}

EvalMetrics evaluate(const Model &model, const Dataset &data, std::size_t m, double p_max, std::size_t best_of_k,
                     std::uint64_t seed, bool record_timing)
{
    EvalMetrics out;
    std::size_t feasible = 0;
    double total_ms = 0.0, best_sum = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const ChannelRealization &h = data.samples[i];
        const auto t0 = std::chrono::steady_clock::now();
        const SampleFeatures f = make_features(h, p_max, model.wavelength);
        const DecoderTrace trace = model.pnet.rollout(model.theta_p, f, *h.grid, m, DecodeMode::greedy, nullptr);
        const Eigen::MatrixXcd hs = select_channel(trace.choices, h.h);
        const BeamformerSet w = model.bnet.infer(model.theta_w, hs, h.noise, p_max).second;
        const double rate = compute_rates(hs, w, h.noise).sum_rate;
        const auto t1 = std::chrono::steady_clock::now();
        total_ms += std::chrono::duration<double, std::milli>(t1 - t0).count();
        out.rates.push_back(rate);
        if (check_feasibility(trace.choices, *h.grid, m) && w.within_budget(p_max))
            ++feasible;
        if (best_of_k > 0) {
            double best = rate;
            for (std::size_t j = 0; j < best_of_k; ++j) {
                Rng rng(derive_seed(seed, Stream::rollout, i, j + 1));
                const DecoderTrace t = model.pnet.rollout(model.theta_p, f, *h.grid, m, DecodeMode::sample, &rng);
                const Eigen::MatrixXcd hj = select_channel(t.choices, h.h);
                const BeamformerSet wj = model.bnet.infer(model.theta_w, hj, h.noise, p_max).second;
                best = std::max(best, compute_rates(hj, wj, h.noise).sum_rate);
            }
            best_sum += best;
        }
    }
    summarize(out);
    if (data.size() > 0) {
        out.feasibility = static_cast<double>(feasible) / static_cast<double>(data.size());
        out.mean_ms = record_timing ? total_ms / static_cast<double>(data.size()) : 0.0;
        if (best_of_k > 0)
            out.best_of_k_mean = best_sum / static_cast<double>(data.size());
    }
    return out;
}

} // namespace maopt
