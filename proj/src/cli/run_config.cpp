// src/cli/run_config.cpp

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

#include "dgu/cli/run_config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace dgu::cli {

namespace {

const std::map<std::string, std::string>& defaults() {
  static const std::map<std::string, std::string> d = {
      {"seed", "1"},
      // Synthetic corpus.
      {"data.phonemes", "8"},
      {"data.successors", "3"},
      {"data.zipf", "1.0"},
      {"data.words_min", "2"},
      {"data.words_max", "4"},
      {"data.word_len_min", "1"},
      {"data.word_len_max", "4"},
      {"data.train", "200"},
      {"data.dev", "50"},
      {"data.eval", "50"},
      {"data.text", "2000"},
      {"data.p_sil", "0.25"},
      {"data.d_raw", "32"},
      {"data.dur_min", "2"},
      {"data.dur_max", "4"},
      {"data.noise_sd", "0.1"},
      // Segment features.
      {"features.k", "16"},
      {"features.kmeans_iters", "50"},
      {"features.restarts", "1"},
      {"features.d_pca", "16"},
      // Masked phoneme LM.
      {"lm.width", "64"},
      {"lm.heads", "2"},
      {"lm.blocks", "2"},
      {"lm.ffn", "128"},
      {"lm.mask_frac", "0.15"},
      {"lm.context_noise", "0.1"},
      {"lm.steps", "300"},
      {"lm.batch", "16"},
      {"lm.lr", "0.001"},
      // Reference sampling.
      {"refs.sweeps", "4"},
      // Adversarial training.
      {"train.batch", "16"},
      {"train.a", "5"},
      {"train.epochs", "20"},
      {"train.p_sil", "0.25"},
      {"train.eta", "1.0"},
      {"train.gamma", "1.5"},
      {"train.lambda", "1.5"},
      {"train.gen_lr", "0.0005"},
      {"train.disc_lr", "0.0003"},
      {"train.beta1", "0.5"},
      {"train.beta2", "0.98"},
      {"train.usage_floor", "0.8"},
      {"train.gen_kernel", "5"},
      {"train.disc_hidden", "32"},
      {"train.disc_kernel", "3"},
      {"train.unet", "64,32,16,8"},
      {"train.shared", "true"},
      {"train.t_embedding", "true"},
      {"train.beta_0", "0.0001"},
      {"train.beta_T", "0.01"},
      {"train.t_min", "5"},
      {"train.t_max", "100"},
      {"train.d_target", "0.6"},
      {"train.interval", "4"},
      {"train.divisor", "100"},
      // Evaluation.
      {"eval.baseline_trials", "200"},
  };
  return d;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

RunConfig::RunConfig() : values_(defaults()) {}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  if (value.empty()) throw ConfigError("empty value for '" + key + "'");
  it->second = value;
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

int RunConfig::get_int(const std::string& key) const {
  const std::string& v = get(key);
  int out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
  return out;
}

double RunConfig::get_double(const std::string& key) const {
  const std::string& v = get(key);
  double out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  return out;
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

std::vector<int> RunConfig::get_ints(const std::string& key) const {
  std::vector<int> out;
  std::stringstream ss(get(key));
  std::string part;
  while (std::getline(ss, part, ',')) {
    part = trim(part);
    int x = 0;
    const auto res = std::from_chars(part.data(), part.data() + part.size(), x);
    if (part.empty() || res.ec != std::errc() || res.ptr != part.data() + part.size())
      throw ConfigError("'" + key + "' expects comma-separated integers");
    out.push_back(x);
  }
  return out;
}

std::uint64_t RunConfig::seed() const {
  const std::string& v = get("seed");
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size())
    throw ConfigError("seed expects a nonnegative integer, got '" + v + "'");
  return out;
}

GrammarConfig RunConfig::grammar() const {
  GrammarConfig g;
  g.phonemes = get_int("data.phonemes");
  g.successors = get_int("data.successors");
  g.zipf = get_double("data.zipf");
  g.words_min = get_int("data.words_min");
  g.words_max = get_int("data.words_max");
  g.word_len_min = get_int("data.word_len_min");
  g.word_len_max = get_int("data.word_len_max");
  return g;
}

DataSizes RunConfig::sizes() const {
  DataSizes s;
  s.train = get_int("data.train");
  s.dev = get_int("data.dev");
  s.eval = get_int("data.eval");
  s.text = get_int("data.text");
  s.p_sil = get_double("data.p_sil");
  return s;
}

features::SynthConfig RunConfig::synth() const {
  features::SynthConfig s;
  s.d_raw = get_int("data.d_raw");
  s.dur_min = get_int("data.dur_min");
  s.dur_max = get_int("data.dur_max");
  s.noise_sd = get_double("data.noise_sd");
  return s;
}

features::PipelineOptions RunConfig::pipeline() const {
  features::PipelineOptions p;
  p.kmeans.k = get_int("features.k");
  p.kmeans.iters = get_int("features.kmeans_iters");
  p.kmeans.restarts = get_int("features.restarts");
  p.d_pca = get_int("features.d_pca");
  return p;
}

lm::MlmConfig RunConfig::mlm() const {
  lm::MlmConfig m;
  m.width = get_int("lm.width");
  m.heads = get_int("lm.heads");
  m.blocks = get_int("lm.blocks");
  m.ffn = get_int("lm.ffn");
  m.mask_frac = get_double("lm.mask_frac");
  m.context_noise = get_double("lm.context_noise");
  m.steps = get_int("lm.steps");
  m.batch = get_int("lm.batch");
  m.lr = get_double("lm.lr");
  return m;
}

lm::RefPoolOptions RunConfig::ref_options(lm::RefMode mode) const {
  lm::RefPoolOptions o;
  o.a = get_int("train.a");
  o.epochs = get_int("train.epochs");
  o.p_sil = get_double("train.p_sil");
  o.sweeps = get_int("refs.sweeps");
  o.mode = mode;
  return o;
}

training::TrainConfig RunConfig::train(int vocab, const training::Ablations& ablations) const {
  training::TrainConfig t;
  t.weights.eta = get_double("train.eta");
  t.weights.gamma = get_double("train.gamma");
  t.weights.lambda = get_double("train.lambda");
  t.net.vocab = vocab;
  t.net.d_in = get_int("features.d_pca");
  t.net.gen_kernel = get_int("train.gen_kernel");
  t.net.disc_hidden = get_int("train.disc_hidden");
  t.net.disc_kernel = get_int("train.disc_kernel");
  t.net.unet = get_ints("train.unet");
  t.net.shared = get_bool("train.shared");
  t.net.t_embedding = get_bool("train.t_embedding");
  t.schedule.beta_0 = get_double("train.beta_0");
  t.schedule.beta_T = get_double("train.beta_T");
  t.schedule.t_min = get_int("train.t_min");
  t.schedule.t_max = get_int("train.t_max");
  t.schedule.d_target = get_double("train.d_target");
  t.schedule.interval = get_int("train.interval");
  t.schedule.divisor = get_double("train.divisor");
  t.batch = get_int("train.batch");
  t.a = get_int("train.a");
  t.epochs = get_int("train.epochs");
  t.p_sil = get_double("train.p_sil");
  t.gen_adam.lr = get_double("train.gen_lr");
  t.disc_adam.lr = get_double("train.disc_lr");
  t.gen_adam.beta1 = t.disc_adam.beta1 = get_double("train.beta1");
  t.gen_adam.beta2 = t.disc_adam.beta2 = get_double("train.beta2");
  t.usage_floor = get_double("train.usage_floor");
  t.ablations = ablations;
  t.seed = derive_seed(seed(), "train/" + ablations.label());
  return t;
}

int RunConfig::baseline_trials() const { return get_int("eval.baseline_trials"); }

void RunConfig::validate() const {
  seed();
  cli::validate(grammar());
  cli::validate(sizes());
  const features::SynthConfig s = synth();
  if (s.d_raw < 1 || s.dur_min < 1 || s.dur_max < s.dur_min || !(s.noise_sd >= 0.0))
    throw ConfigError("invalid synthetic feature settings");
  const features::PipelineOptions p = pipeline();
  if (p.kmeans.k < 1 || p.kmeans.iters < 1 || p.kmeans.restarts < 1 || p.d_pca < 1)
    throw ConfigError("invalid feature pipeline settings");
  if (p.d_pca > s.d_raw) throw ConfigError("features.d_pca exceeds data.d_raw");
  const lm::MlmConfig m = mlm();
  if (m.width < 1 || m.heads < 1 || m.width % m.heads != 0 || m.blocks < 1 || m.ffn < 1 || m.steps < 0 ||
      m.batch < 1 || !(m.lr >= 0.0) || !(m.mask_frac > 0.0 && m.mask_frac <= 1.0) ||
      !(m.context_noise >= 0.0 && m.context_noise <= 1.0))
    throw ConfigError("invalid phoneme LM settings");
  if (get_int("refs.sweeps") < 0) throw ConfigError("refs.sweeps must be >= 0");
  if (baseline_trials() < 1) throw ConfigError("eval.baseline_trials must be >= 1");
  train(grammar().phonemes + 1, {}).validate();
}

std::string RunConfig::hash(const std::vector<std::string>& prefixes, const std::string& upstream) const {
  std::string canon = upstream + "\n";
  for (const auto& [k, v] : values_)
    for (const std::string& p : prefixes)
      if (k.rfind(p, 0) == 0) {
        canon += k + "=" + v + "\n";
        break;
      }
  return hex64(fnv1a(canon));
}

std::string data_hash(const RunConfig& cfg) { return cfg.hash({"seed", "data.", "features."}); }

std::string lm_hash(const RunConfig& cfg) { return cfg.hash({"lm.", "train.p_sil"}, data_hash(cfg)); }

std::string refs_hash(const RunConfig& cfg, lm::RefMode mode) {
  return cfg.hash({"refs.", "train.a", "train.epochs", "train.p_sil"}, lm_hash(cfg) + "/" + ref_mode_name(mode));
}

std::string train_hash(const RunConfig& cfg, const training::Ablations& ablations) {
  return cfg.hash({"train."}, refs_hash(cfg, ref_mode(ablations)) + "/" + ablations.label());
}

lm::RefMode ref_mode(const training::Ablations& a) {
  if (a.no_bert) return lm::RefMode::kCorpus;
  if (a.no_length) return lm::RefMode::kFreeLength;
  return lm::RefMode::kLengthGuided;
}

std::string ref_mode_name(lm::RefMode mode) {
  switch (mode) {
    case lm::RefMode::kLengthGuided:
      return "length_guided";
    case lm::RefMode::kFreeLength:
      return "free_length";
    case lm::RefMode::kCorpus:
      return "corpus";
  }
  return "unknown";
}

}  // namespace dgu::cli
