// tests/training_test.cpp

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

#include <cmath>
#include <filesystem>
#include <fstream>

#include "dgu/phoneme_lm/phoneme_lm.hpp"
#include "dgu/training/silence.hpp"
#include "dgu/training/training.hpp"
#include "doctest.h"
#include "grad_check.hpp"
#include "vanilla_oracle.hpp"

using namespace dgu;
using namespace dgu::training;

namespace {

constexpr int kVocab = 5;  // four phonemes + SIL
constexpr int kDin = 3;

Matrix one_hot(const PhonemeIds& ids, int vocab) {
  Matrix m = Matrix::Zero(static_cast<Index>(ids.size()), vocab);
  for (std::size_t i = 0; i < ids.size(); ++i) m(static_cast<Index>(i), ids[i]) = 1.0;
  return m;
}

struct Fixture {
  TrainData data;
  lm::RefPool pool;
};

/// n utterances with per_utt one-hot references each; reference length
/// equals segment length unless ragged.
Fixture make_fixture(int n, int per_utt, std::uint64_t seed, bool ragged = false) {
  Fixture f;
  Rng rng(seed);
  std::uniform_int_distribution<int> len(3, 6), sym(0, kVocab - 1);
  for (int u = 0; u < n; ++u) {
    const std::string id = "utt" + std::to_string(u);
    const int L = len(rng);
    f.data.ids.push_back(id);
    f.data.segments.push_back(dgu::testing::random_matrix(L, kDin, rng));
    auto& entries = f.pool.entries[id];
    for (int k = 0; k < per_utt; ++k) {
      PhonemeIds ids(static_cast<std::size_t>(ragged ? len(rng) : L));
      for (int& x : ids) x = sym(rng);
      entries.push_back({ids, one_hot(ids, kVocab)});
    }
  }
  f.pool.config_hash = "fixture";
  return f;
}

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.net.vocab = kVocab;
  cfg.net.d_in = kDin;
  cfg.net.unet = {8, 6, 4, 3};
  cfg.net.disc_hidden = 6;
  cfg.batch = 2;
  cfg.a = 2;
  cfg.epochs = 2;
  cfg.seed = 17;
  return cfg;
}

std::vector<std::size_t> first(std::size_t n) {
  std::vector<std::size_t> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = i;
  return v;
}

}  // namespace

TEST_CASE("silence insertion at the extremes") {
  Rng rng(1);
  const std::vector<PhonemeIds> words = {{0, 1}, {2}, {3, 0, 1}};
  CHECK(silence_insert(words, 0.0, 9, rng) == PhonemeIds{0, 1, 2, 3, 0, 1});
  CHECK(silence_insert(words, 1.0, 9, rng) == PhonemeIds{0, 1, 9, 2, 9, 3, 0, 1});
  CHECK(silence_insert({}, 0.5, 9, rng).empty());
  CHECK_THROWS_AS(silence_insert(words, 1.5, 9, rng), ConfigError);
  CHECK_THROWS_AS(silence_insert(words, -0.1, 9, rng), ConfigError);
}

TEST_CASE("silence count follows the binomial law") {
  Rng rng(2);
  const std::vector<PhonemeIds> words = {{0}, {1}, {2}, {3}, {0}};
  const int n = 10000;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const PhonemeIds s = silence_insert(words, 0.25, 7, rng);
    total += static_cast<double>(std::count(s.begin(), s.end(), 7));
  }
  const double sigma = std::sqrt(4 * 0.25 * 0.75 / n);
  CHECK(std::abs(total / n - 1.0) < 3.0 * sigma);
}

TEST_CASE("config validation and ablation names") {
  TrainConfig cfg = small_config();
  CHECK_NOTHROW(cfg.validate());
  TrainConfig bad = cfg;
  bad.weights.eta = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.batch = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = cfg;
  bad.p_sil = 2.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  Ablations a;
  CHECK_THROWS_AS(enable_ablation(a, "no_everything"), ConfigError);
  for (const std::string& name : ablation_names()) enable_ablation(a, name);
  CHECK(a.no_bert);
  CHECK(a.no_length);
  CHECK(a.no_tdisc);
  CHECK(a.no_unet);
  CHECK(Ablations{}.label() == "full");
}

TEST_CASE("no_unet feeds the discriminator the raw simplex") {
  TrainConfig cfg = small_config();
  CHECK(cfg.effective_net().disc_input_width() == 4);
  cfg.ablations.no_unet = true;
  CHECK(cfg.effective_net().disc_input_width() == kVocab);
  TrainState state(cfg);
  for (const auto& e : state.disc.entries()) CHECK(e.first.rfind("unet.", 0) != 0);
}

TEST_CASE("controller step uses the configured batch") {
  TrainConfig cfg = small_config();
  cfg.batch = 16;
  CHECK(TrainState(cfg).schedule.step_size() == doctest::Approx(0.64));
}

TEST_CASE("zero learning rates leave parameters unchanged but record losses") {
  TrainConfig cfg = small_config();
  cfg.gen_adam.lr = 0.0;
  cfg.disc_adam.lr = 0.0;
  Fixture f = make_fixture(4, 4, 3);
  f.data.refs = &f.pool;
  TrainState state(cfg);
  const auto g0 = state.gen.value_hash(), d0 = state.disc.value_hash();
  const auto b = first(2);
  train_step(state, f.data, b, b);
  CHECK(state.gen.value_hash() == g0);
  CHECK(state.disc.value_hash() == d0);
  REQUIRE(state.history.size() == 1);
  CHECK(state.history[0].loss_g.has_value());
  CHECK(state.history[0].loss_d.has_value());
  CHECK(std::isfinite(*state.history[0].loss_d));
}

TEST_CASE("alternation freezes the idle network") {
  Fixture f = make_fixture(4, 4, 4);
  f.data.refs = &f.pool;
  TrainState state(small_config());
  const auto b = first(2);
  const auto g0 = state.gen.value_hash(), d0 = state.disc.value_hash();
  discriminator_update(state, f.data, b);
  CHECK(state.gen.value_hash() == g0);
  const auto d1 = state.disc.value_hash();
  CHECK(d1 != d0);
  generator_update(state, f.data, b);
  CHECK(state.disc.value_hash() == d1);
  CHECK(state.gen.value_hash() != g0);
}

TEST_CASE("controller fires every interval steps") {
  Fixture f = make_fixture(4, 40, 5);
  f.data.refs = &f.pool;
  TrainState state(small_config());
  const auto b = first(2);
  for (int i = 0; i < 12; ++i) train_step(state, f.data, b, b);
  std::vector<long> fired;
  for (const MetricRow& r : state.history)
    if (r.r_d) fired.push_back(r.step);
  CHECK(fired == std::vector<long>{4, 8, 12});
  CHECK(state.controller_events == 3);
  CHECK(state.history.size() == 12u + 3u);
}

TEST_CASE("one seeded step is reproducible") {
  Fixture f = make_fixture(4, 4, 6);
  f.data.refs = &f.pool;
  TrainState a(small_config()), b(small_config());
  const auto batch = first(2);
  train_step(a, f.data, batch, batch);
  train_step(b, f.data, batch, batch);
  CHECK(a.gen.value_hash() == b.gen.value_hash());
  CHECK(a.disc.value_hash() == b.disc.value_hash());
  CHECK(*a.history[0].loss_d == *b.history[0].loss_d);
  CHECK(*a.history[0].loss_g == *b.history[0].loss_g);
}

TEST_CASE("reference pool accounting and exhaustion") {
  TrainConfig cfg = small_config();
  Fixture f = make_fixture(5, cfg.a * cfg.epochs, 7);
  f.data.refs = &f.pool;
  TrainState state(cfg);
  train(state, f.data, {}, nullptr);
  for (const std::string& id : f.data.ids) CHECK(state.ref_cursor.at(id) == 4u);
  // ceil(5 / 2) = 3 steps per round, 2 rounds, 2 epochs.
  CHECK(state.step == 12);
  CHECK(state.history.size() == static_cast<std::size_t>(state.step + state.controller_events));

  Fixture short_pool = make_fixture(5, cfg.a * cfg.epochs - 1, 7);
  short_pool.data.refs = &short_pool.pool;
  TrainState s2(cfg);
  CHECK_THROWS_AS(train(s2, short_pool.data, {}, nullptr), ProvisioningError);

  TrainData no_pool = f.data;
  no_pool.refs = nullptr;
  TrainState s3(cfg);
  CHECK_THROWS_AS(train(s3, no_pool, {}, nullptr), ProvisioningError);
}

TEST_CASE("no_tdisc freezes the horizon") {
  TrainConfig cfg = small_config();
  cfg.ablations.no_tdisc = true;
  Fixture f = make_fixture(5, cfg.a * cfg.epochs, 8);
  f.data.refs = &f.pool;
  TrainState state(cfg);
  train(state, f.data, {}, nullptr);
  CHECK(state.controller_events == 0);
  for (const MetricRow& r : state.history) {
    CHECK(!r.r_d);
    CHECK(*r.t_live == cfg.schedule.t_min);
  }
}

TEST_CASE("ragged references exercise truncation") {
  Fixture f = make_fixture(6, 2, 9, true);
  f.data.refs = &f.pool;
  TrainState state(small_config());
  const auto b = first(6);
  discriminator_update(state, f.data, b);
  discriminator_update(state, f.data, b);
  CHECK(state.truncated_pairs > 0);
}

TEST_CASE("vanilla reduction is exact") {
  TrainConfig cfg = small_config();
  cfg.ablations.no_tdisc = true;
  cfg.ablations.no_unet = true;
  Fixture f = make_fixture(4, 1, 10, true);
  f.data.refs = &f.pool;
  TrainState state(cfg);
  const ParamStore gen0 = state.gen, disc0 = state.disc;
  const auto b = first(3);
  const std::vector<std::size_t> gb = {3, 1, 0};
  train_step(state, f.data, b, gb);

  std::vector<Matrix> segs, refs, gsegs;
  for (std::size_t i : b) {
    segs.push_back(f.data.segments[i]);
    refs.push_back(f.pool.entries.at(f.data.ids[i])[0].dense);
  }
  for (std::size_t i : gb) gsegs.push_back(f.data.segments[i]);
  const testing::vanilla::Weights w{cfg.weights.eta, cfg.weights.gamma, cfg.weights.lambda};
  Rng gp = make_rng(cfg.seed, "train/gp");
  const auto d = testing::vanilla::discriminator_loss(gen0, disc0, segs, refs, w, gp);
  const auto g = testing::vanilla::generator_loss(gen0, state.disc, gsegs, w);
  const MetricRow& row = state.history.at(0);
  CHECK(*row.loss_d == d.total);
  CHECK(*row.l_gp == d.l_gp);
  CHECK(*row.loss_g == g.total);
  CHECK(*row.l_pd == g.l_pd);
  CHECK(*row.l_sp == g.l_sp);
  CHECK(state.truncated_pairs > 0);
}

TEST_CASE("checkpoint selection") {
  std::vector<CheckpointEval> one = {{1, 1, 3.0, 0.9}};
  CHECK(select_checkpoint(one, 0.8).index == 0);
  std::vector<CheckpointEval> two = {{1, 1, 2.0, 0.9}, {2, 2, 1.5, 0.9}};
  CHECK(select_checkpoint(two, 0.8).index == 1);
  std::vector<CheckpointEval> tie = {{1, 1, 1.5, 0.9}, {2, 2, 1.5, 1.0}};
  CHECK(select_checkpoint(tie, 0.8).index == 0);
  std::vector<CheckpointEval> floor = {{1, 1, 0.5, 0.25}, {2, 2, 2.5, 0.75}, {3, 3, 3.0, 1.0}};
  const Selection s = select_checkpoint(floor, 0.8);
  CHECK(s.index == 2);
  CHECK(!s.fallback);
  std::vector<CheckpointEval> none = {{1, 1, 0.5, 0.25}, {2, 2, 2.5, 0.5}, {3, 3, 1.0, 0.5}};
  const Selection fb = select_checkpoint(none, 0.8);
  CHECK(fb.fallback);
  CHECK(fb.index == 1);
  CHECK_THROWS_AS(select_checkpoint(std::span<const CheckpointEval>(), 0.8), InputError);
}

TEST_CASE("degenerate generator is excluded by the usage floor") {
  TrainConfig cfg = small_config();
  TrainState state(cfg);
  Rng rng(11);
  lm::MlmConfig mc;
  mc.width = 8;
  mc.heads = 2;
  mc.blocks = 1;
  mc.ffn = 8;
  const lm::MaskedLm lm(kVocab, mc, rng);
  Fixture f = make_fixture(6, 1, 12);
  const CheckpointEval healthy = evaluate_checkpoint(state, f.data.segments, lm);
  state.gen.at("gen.conv.w").value.setZero();
  Matrix bias = Matrix::Zero(1, kVocab);
  bias(0, 2) = 50.0;
  state.gen.at("gen.conv.b").value = bias;
  const CheckpointEval degenerate = evaluate_checkpoint(state, f.data.segments, lm);
  CHECK(degenerate.vocab_usage == doctest::Approx(0.25));
  REQUIRE(degenerate.lm_nll);
  std::vector<CheckpointEval> hist = {degenerate, healthy};
  hist[0].lm_nll = 0.0;  // best NLL, still rejected
  hist[1].vocab_usage = 1.0;
  CHECK(select_checkpoint(hist, 0.8).index == 1);
}

TEST_CASE("training with evaluation records one checkpoint per epoch") {
  TrainConfig cfg = small_config();
  Fixture f = make_fixture(4, cfg.a * cfg.epochs, 13);
  f.data.refs = &f.pool;
  Rng rng(14);
  lm::MlmConfig mc;
  mc.width = 8;
  mc.heads = 2;
  mc.blocks = 1;
  mc.ffn = 8;
  const lm::MaskedLm lm(kVocab, mc, rng);
  TrainState state(cfg);
  train(state, f.data, f.data.segments, &lm);
  CHECK(state.checkpoints.size() == 2u);
  CHECK(state.snapshots.size() == 2u);
  CHECK(state.snapshots.back().value_hash() == state.gen.value_hash());
  CHECK(state.history.back().vocab_usage.has_value());
}

TEST_CASE("metrics csv layout") {
  const auto path = std::filesystem::temp_directory_path() / "dgu_metrics_test.csv";
  MetricRow a;
  a.step = 1;
  a.epoch = 1;
  a.loss_g = 0.5;
  a.loss_d = 1.25;
  a.t_live = 5.0;
  MetricRow b;
  b.step = 1;
  b.epoch = 1;
  b.r_d = -0.5;
  b.t_live = 5.0;
  const std::vector<MetricRow> rows = {a, b};
  write_metrics_csv(path, rows);
  std::ifstream in(path);
  std::string header, l1, l2;
  std::getline(in, header);
  std::getline(in, l1);
  std::getline(in, l2);
  CHECK(header == "step,epoch,loss_g,loss_d,l_pd,l_sp,l_gp,r_d,T_live,lm_nll,vocab_usage");
  CHECK(l1 == "1,1,0.5,1.25,,,,,5,,");
  CHECK(l2 == "1,1,,,,,,-0.5,5,,");
  MetricRow bad = a;
  bad.loss_g = std::nan("");
  const std::vector<MetricRow> bad_rows = {bad};
  CHECK_THROWS_AS(write_metrics_csv(path, bad_rows), DivergenceError);
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint sidecar round trip") {
  const auto path = std::filesystem::temp_directory_path() / "dgu_ckpt_test.dguw";
  TrainState state(small_config());
  save_checkpoint(path, state.gen, "abc123", 42);
  const CheckpointInfo info = read_checkpoint_sidecar(path);
  CHECK(info.config_hash == "abc123");
  CHECK(info.step == 42);
  const ParamStore back = load_weights(path);
  const Matrix& w = state.gen.value("gen.conv.w");
  CHECK((back.value("gen.conv.w") - w).cwiseAbs().maxCoeff() < 1e-6);
  std::filesystem::remove(path);
  std::filesystem::remove(path.string() + ".txt");
}
