// include/dgu/training/training.hpp

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

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dgu/adversarial/adversarial.hpp"
#include "dgu/diffusion/diffusion.hpp"
#include "dgu/phoneme_lm/phoneme_lm.hpp"
#include "dgu/training/silence.hpp"

namespace dgu::training {

struct Ablations {
  bool no_bert = false;
  bool no_length = false;
  bool no_tdisc = false;
  bool no_unet = false;

  bool any() const { return no_bert || no_length || no_tdisc || no_unet; }
  /// "full" when nothing is switched off, otherwise names joined by '+'.
  std::string label() const;
};

/// Accepts no_bert, no_length, no_tdisc, no_unet; anything else is a config error.
void enable_ablation(Ablations& a, const std::string& name);
inline const std::vector<std::string>& ablation_names() {
  static const std::vector<std::string> names = {"no_bert", "no_length", "no_tdisc", "no_unet"};
  return names;
}

struct TrainConfig {
  adversarial::GanWeights weights;
  adversarial::NetConfig net;
  diffusion::ScheduleConfig schedule;
  int batch = 16;
  /// Fresh references per utterance per epoch.
  int a = 5;
  int epochs = 20;
  double p_sil = 0.25;
  AdamOptions gen_adam{5e-4, 0.5, 0.98, 1e-8};
  AdamOptions disc_adam{3e-4, 0.5, 0.98, 1e-8};
  double usage_floor = 0.8;
  Ablations ablations;
  std::uint64_t seed = 1;

  void validate() const;
  /// Network and schedule settings with ablations applied.
  adversarial::NetConfig effective_net() const;
  diffusion::ScheduleConfig effective_schedule() const;
};

struct MetricRow {
  long step = 0;
  int epoch = 0;
  std::optional<double> loss_g, loss_d, l_pd, l_sp, l_gp, r_d, t_live, lm_nll, vocab_usage;
};

struct CheckpointEval {
  long step = 0;
  int epoch = 0;
  /// Empty when every decoded dev string was empty.
  std::optional<double> lm_nll;
  double vocab_usage = 0.0;
};

/// Training inputs. Segments are the pooled generator inputs; the reference
/// pool supplies one fresh entry per utterance per discriminator use.
struct TrainData {
  std::vector<std::string> ids;
  std::vector<Matrix> segments;
  const lm::RefPool* refs = nullptr;
};

struct TrainState {
  TrainConfig cfg;
  adversarial::NetConfig net;
  ParamStore gen;
  ParamStore disc;
  diffusion::DiffusionSchedule schedule;
  long step = 0;
  int epoch = 0;
  std::vector<MetricRow> history;
  std::vector<CheckpointEval> checkpoints;
  std::vector<ParamStore> snapshots;
  std::map<std::string, std::size_t> ref_cursor;
  std::vector<double> realness;
  long controller_events = 0;
  long truncated_pairs = 0;
  Rng batch_rng, time_rng, noise_rng, gp_rng;

  explicit TrainState(const TrainConfig& cfg);
};

struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Next unused reference for an utterance; throws ProvisioningError when its
/// pool is exhausted.
const lm::RefEntry& take_reference(TrainState& state, const TrainData& data, std::size_t utt);

/// One discriminator update on the given utterances. The generator store is
/// read as constants and left untouched.
adversarial::DiscLoss discriminator_update(TrainState& state, const TrainData& data,
                                           std::span<const std::size_t> batch);
/// One generator update; the discriminator store is left untouched.
adversarial::GenLoss generator_update(TrainState& state, const TrainData& data, std::span<const std::size_t> batch);

/// One discriminator update on disc_batch, then one generator update on
/// gen_batch, one metrics row, and a controller event every a_i steps.
void train_step(TrainState& state, const TrainData& data, std::span<const std::size_t> disc_batch,
                std::span<const std::size_t> gen_batch);

/// Greedy-decodes the dev segments with the current generator and scores
/// them: mean LM NLL of the nonempty decoded strings and the fraction of the
/// non-silence inventory that appears.
CheckpointEval evaluate_checkpoint(const TrainState& state, std::span<const Matrix> dev_segments,
                                   const lm::MaskedLm& lm);

struct Selection {
  std::size_t index = 0;
  /// Set when no checkpoint reached the usage floor and the most diverse
  /// one was taken instead.
  bool fallback = false;
};

/// Lowest NLL among checkpoints with usage >= floor, ties to the earliest.
Selection select_checkpoint(std::span<const CheckpointEval> history, double usage_floor);

/// Runs cfg.epochs epochs of cfg.a shuffled rounds each, evaluating and
/// snapshotting the generator after every epoch when an LM is given.
void train(TrainState& state, const TrainData& data, std::span<const Matrix> dev_segments,
           const lm::MaskedLm* lm);

void write_metrics_csv(const std::filesystem::path& path, std::span<const MetricRow> rows);
inline constexpr const char* kMetricsHeader =
    "step,epoch,loss_g,loss_d,l_pd,l_sp,l_gp,r_d,T_live,lm_nll,vocab_usage";

/// ParamStore file plus "<path>.txt" holding config_hash and step.
void save_checkpoint(const std::filesystem::path& path, const ParamStore& store, const std::string& config_hash,
                     long step);
/// "<path>.txt" with config_hash and step lines.
void write_sidecar(const std::filesystem::path& path, const std::string& config_hash, long step);

struct CheckpointInfo {
  std::string config_hash;
  long step = 0;
};
CheckpointInfo read_checkpoint_sidecar(const std::filesystem::path& path);

}  // namespace dgu::training
