// src/training/training.cpp

// Copyright 2026  The dgu Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "dgu/training/training.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "dgu/evaluation/evaluation.hpp"

namespace dgu::training {

std::string Ablations::label() const {
  std::string out;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += '+';
    out += name;
  };
  add(no_bert, "no_bert");
  add(no_length, "no_length");
  add(no_tdisc, "no_tdisc");
  add(no_unet, "no_unet");
  return out.empty() ? "full" : out;
}

void enable_ablation(Ablations& a, const std::string& name) {
  if (name == "no_bert")
    a.no_bert = true;
  else if (name == "no_length")
    a.no_length = true;
  else if (name == "no_tdisc")
    a.no_tdisc = true;
  else if (name == "no_unet")
    a.no_unet = true;
  else
    throw ConfigError("unknown ablation '" + name + "'");
}

void TrainConfig::validate() const {
  if (weights.eta < 0 || weights.gamma < 0 || weights.lambda < 0) throw ConfigError("loss weights must be >= 0");
  if (batch < 1) throw ConfigError("batch size must be >= 1");
  if (a < 1 || epochs < 1) throw ConfigError("a and epochs must be >= 1");
  if (!(p_sil >= 0.0 && p_sil <= 1.0)) throw ConfigError("p_SIL must lie in [0, 1]");
  if (!(usage_floor >= 0.0 && usage_floor <= 1.0)) throw ConfigError("usage floor must lie in [0, 1]");
  if (gen_adam.lr < 0 || disc_adam.lr < 0) throw ConfigError("learning rates must be >= 0");
  if (schedule.interval < 1 || schedule.divisor <= 0)
    throw ConfigError("controller interval and divisor must be positive");
  effective_net().validate();
  diffusion::make_schedule(effective_schedule());
}

adversarial::NetConfig TrainConfig::effective_net() const {
  adversarial::NetConfig n = net;
  n.t_max = schedule.t_max;
  if (ablations.no_unet) n.use_unet = false;
  if (ablations.no_tdisc) n.t_embedding = false;
  return n;
}

diffusion::ScheduleConfig TrainConfig::effective_schedule() const {
  diffusion::ScheduleConfig s = schedule;
  s.batch = batch;
  return s;
}

TrainState::TrainState(const TrainConfig& c)
    : cfg(c),
      net(c.effective_net()),
      schedule((c.validate(), diffusion::make_schedule(c.effective_schedule()))),
      batch_rng(make_rng(c.seed, "train/batch")),
      time_rng(make_rng(c.seed, "train/time")),
      noise_rng(make_rng(c.seed, "train/noise")),
      gp_rng(make_rng(c.seed, "train/gp")) {
  Rng g = make_rng(c.seed, "init/generator");
  adversarial::init_generator(gen, net, g);
  Rng d = make_rng(c.seed, "init/discriminator");
  adversarial::init_discriminator(disc, net, d);
}

namespace {

void require_finite(double v, const char* what, long step) {
  if (!std::isfinite(v))
    throw DivergenceError(std::string("non-finite ") + what + " at step " + std::to_string(step));
}

std::vector<int> draw_timesteps(TrainState& state, std::size_t n) {
  if (state.cfg.ablations.no_tdisc) return std::vector<int>(n, 0);
  return diffusion::sample_t(state.schedule, static_cast<int>(n), state.time_rng);
}

}  // namespace

const lm::RefEntry& take_reference(TrainState& state, const TrainData& data, std::size_t utt) {
  const std::string& id = data.ids.at(utt);
  if (!data.refs) throw ProvisioningError("no reference pool");
  auto it = data.refs->entries.find(id);
  if (it == data.refs->entries.end()) throw ProvisioningError("reference pool has no entries for " + id);
  std::size_t& cursor = state.ref_cursor[id];
  if (cursor >= it->second.size())
    throw ProvisioningError("reference pool exhausted for " + id + " after " + std::to_string(cursor) +
                            " entries; provision a x E to match the run");
  const lm::RefEntry& e = it->second[cursor++];
  if (e.dense.cols() != state.net.vocab)
    throw DimensionError("reference width " + std::to_string(e.dense.cols()) + " vs vocabulary " +
                         std::to_string(state.net.vocab));
  return e;
}

adversarial::DiscLoss discriminator_update(TrainState& state, const TrainData& data,
                                           std::span<const std::size_t> batch) {
  const std::vector<int> ts = draw_timesteps(state, batch.size());
  std::vector<adversarial::DiscItem> items;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const lm::RefEntry& ref = take_reference(state, data, batch[i]);
    items.push_back({&data.segments.at(batch[i]), &ref.dense, ts[i]});
  }
  Tape tape;
  TapeContext g(tape, state.gen, false), d(tape, state.disc, true);
  adversarial::DiscLoss loss = adversarial::loss_discriminator(g, d, state.net, state.schedule, items,
                                                               state.cfg.weights, state.noise_rng, state.gp_rng);
  require_finite(loss.terms.total, "discriminator loss", state.step);
  tape.backward(loss.loss, state.disc);
  if (!state.disc.grads_finite())
    throw DivergenceError("non-finite discriminator gradient at step " + std::to_string(state.step));
  adam_step(state.disc, state.cfg.disc_adam);
  state.realness.insert(state.realness.end(), loss.realness.begin(), loss.realness.end());
  state.truncated_pairs += loss.truncated;
  return loss;
}

adversarial::GenLoss generator_update(TrainState& state, const TrainData& data, std::span<const std::size_t> batch) {
  const std::vector<int> ts = draw_timesteps(state, batch.size());
  std::vector<adversarial::GenItem> items;
  for (std::size_t i = 0; i < batch.size(); ++i) items.push_back({&data.segments.at(batch[i]), ts[i]});
  Tape tape;
  TapeContext g(tape, state.gen, true), d(tape, state.disc, false);
  adversarial::GenLoss loss =
      adversarial::loss_generator(g, d, state.net, state.schedule, items, state.cfg.weights, state.noise_rng);
  require_finite(loss.terms.total, "generator loss", state.step);
  tape.backward(loss.loss, state.gen);
  if (!state.gen.grads_finite())
    throw DivergenceError("non-finite generator gradient at step " + std::to_string(state.step));
  adam_step(state.gen, state.cfg.gen_adam);
  return loss;
}

void train_step(TrainState& state, const TrainData& data, std::span<const std::size_t> disc_batch,
                std::span<const std::size_t> gen_batch) {
  const adversarial::DiscLoss dl = discriminator_update(state, data, disc_batch);
  const adversarial::GenLoss gl = generator_update(state, data, gen_batch);
  ++state.step;
  MetricRow row;
  row.step = state.step;
  row.epoch = state.epoch;
  row.loss_g = gl.terms.total;
  row.loss_d = dl.terms.total;
  row.l_pd = gl.terms.l_pd;
  row.l_sp = gl.terms.l_sp;
  row.l_gp = dl.terms.l_gp;
  row.t_live = state.schedule.t_live();
  state.history.push_back(row);

  if (!state.cfg.ablations.no_tdisc && state.step % state.cfg.schedule.interval == 0) {
    const double r_d = diffusion::estimate_rd(state.realness);
    state.realness.clear();
    diffusion::update_T(state.schedule, r_d);
    ++state.controller_events;
    MetricRow ev;
    ev.step = state.step;
    ev.epoch = state.epoch;
    ev.r_d = r_d;
    ev.t_live = state.schedule.t_live();
    state.history.push_back(ev);
  }
}

CheckpointEval evaluate_checkpoint(const TrainState& state, std::span<const Matrix> dev_segments,
                                   const lm::MaskedLm& lm) {
  const int sil = state.net.vocab - 1;
  EagerContext ctx(state.gen);
  std::set<int> used;
  double nll = 0.0;
  int scored = 0;
  for (const Matrix& s : dev_segments) {
    const PhonemeIds ids = evaluation::decode(adversarial::generate(ctx, state.net, s), sil);
    used.insert(ids.begin(), ids.end());
    if (ids.empty()) continue;
    nll += lm::nll_score(lm, ids);
    ++scored;
  }
  CheckpointEval ev;
  ev.step = state.step;
  ev.epoch = state.epoch;
  if (scored > 0) ev.lm_nll = nll / scored;
  ev.vocab_usage = static_cast<double>(used.size()) / static_cast<double>(sil);
  return ev;
}

Selection select_checkpoint(std::span<const CheckpointEval> history, double usage_floor) {
  if (history.empty()) throw InputError("select_checkpoint: no evaluated checkpoints");
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < history.size(); ++i) {
    const CheckpointEval& c = history[i];
    if (c.vocab_usage < usage_floor || !c.lm_nll) continue;
    if (!best || *c.lm_nll < *history[*best].lm_nll) best = i;
  }
  if (best) return {*best, false};
  std::size_t widest = 0;
  for (std::size_t i = 1; i < history.size(); ++i)
    if (history[i].vocab_usage > history[widest].vocab_usage) widest = i;
  return {widest, true};
}

void train(TrainState& state, const TrainData& data, std::span<const Matrix> dev_segments, const lm::MaskedLm* lm) {
  const std::size_t n = data.ids.size();
  if (n == 0 || data.segments.size() != n) throw InputError("train: empty or inconsistent training data");
  const std::size_t B = static_cast<std::size_t>(state.cfg.batch);
  std::vector<std::size_t> disc_order(n), gen_order(n);
  for (int e = 0; e < state.cfg.epochs; ++e) {
    state.epoch = e + 1;
    for (int round = 0; round < state.cfg.a; ++round) {
      std::iota(disc_order.begin(), disc_order.end(), std::size_t{0});
      std::iota(gen_order.begin(), gen_order.end(), std::size_t{0});
      std::shuffle(disc_order.begin(), disc_order.end(), state.batch_rng);
      std::shuffle(gen_order.begin(), gen_order.end(), state.batch_rng);
      for (std::size_t begin = 0; begin < n; begin += B) {
        const std::size_t len = std::min(B, n - begin);
        train_step(state, data, std::span<const std::size_t>(disc_order).subspan(begin, len),
                   std::span<const std::size_t>(gen_order).subspan(begin, len));
      }
    }
    if (lm && !dev_segments.empty()) {
      const CheckpointEval ev = evaluate_checkpoint(state, dev_segments, *lm);
      state.checkpoints.push_back(ev);
      state.snapshots.push_back(state.gen);
      MetricRow& last = state.history.back();
      last.lm_nll = ev.lm_nll;
      last.vocab_usage = ev.vocab_usage;
    }
  }
}

namespace {

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void put(std::ostream& out, const std::optional<double>& v) {
  out << ',';
  if (v) {
    if (!std::isfinite(*v)) throw DivergenceError("refusing to record a non-finite metric");
    out << format_number(*v);
  }
}

}  // namespace

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricRow> rows) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << kMetricsHeader << '\n';
  for (const MetricRow& r : rows) {
    out << r.step << ',' << r.epoch;
    for (const auto* v :
         {&r.loss_g, &r.loss_d, &r.l_pd, &r.l_sp, &r.l_gp, &r.r_d, &r.t_live, &r.lm_nll, &r.vocab_usage})
      put(out, *v);
    out << '\n';
  }
  if (!out) throw FormatError("write failed: " + path.string());
}

void save_checkpoint(const std::filesystem::path& path, const ParamStore& store, const std::string& config_hash,
                     long step) {
  save_weights(path, store);
  write_sidecar(path, config_hash, step);
}

void write_sidecar(const std::filesystem::path& path, const std::string& config_hash, long step) {
  std::ofstream side(path.string() + ".txt");
  if (!side) throw FormatError("cannot write " + path.string() + ".txt");
  side << "config_hash=" << config_hash << "\nstep=" << step << '\n';
}

CheckpointInfo read_checkpoint_sidecar(const std::filesystem::path& path) {
  std::ifstream in(path.string() + ".txt");
  if (!in) throw FormatError("cannot read " + path.string() + ".txt");
  CheckpointInfo info;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "config_hash")
      info.config_hash = value;
    else if (key == "step")
      info.step = std::stol(value);
  }
  return info;
}

}  // namespace dgu::training
