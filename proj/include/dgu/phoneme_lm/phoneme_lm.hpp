// include/dgu/phoneme_lm/phoneme_lm.hpp

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

#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dgu/numerics/context.hpp"

namespace dgu::lm {

/// A sentence as a list of words, each a run of phoneme ids.
using Sentence = std::vector<PhonemeIds>;

struct MlmConfig {
  int width = 64;
  int heads = 2;
  int blocks = 2;
  int ffn = 128;
  double mask_frac = 0.15;
  /// Probability of replacing each visible input id with a random one.
  double context_noise = 0.1;
  int steps = 300;
  int batch = 16;
  double lr = 1e-3;
};

/// Small pre-norm transformer encoder over phoneme ids. Inputs range over
/// the inventory plus one MASK id; outputs are distributions over the
/// inventory only. The output head starts at zero, so an untrained model
/// predicts the uniform distribution.
class MaskedLm {
 public:
  MaskedLm() = default;
  MaskedLm(int vocab, const MlmConfig& cfg, Rng& rng);

  int vocab() const { return vocab_; }
  int mask_id() const { return vocab_; }
  int width() const { return width_; }
  int heads() const { return heads_; }
  int blocks() const { return blocks_; }

  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  /// Unnormalized output scores [L × vocab].
  template <typename Ctx>
  typename Ctx::Value logits(Ctx& ctx, const PhonemeIds& ids) const;

  /// Softmax rows of the eager forward pass.
  Matrix conditionals(const PhonemeIds& ids) const;

  void save(const std::filesystem::path& path) const;
  static MaskedLm load(const std::filesystem::path& path);

 private:
  int vocab_ = 0;
  int width_ = 0;
  int heads_ = 0;
  int blocks_ = 0;
  int ffn_ = 0;
  ParamStore params_;
};

Matrix sinusoidal_positions(Index length, Index width);

struct MlmTrace {
  std::vector<double> loss;
};

/// Masked-token cross entropy training with Adam. Every sequence gets at
/// least one masked position.
MaskedLm train_mlm(const std::vector<PhonemeIds>& corpus, int vocab, const MlmConfig& cfg, Rng& rng,
                   MlmTrace* trace = nullptr);

struct MaskedEval {
  double nll = 0.0;
  double accuracy = 0.0;
};

/// Mean NLL and argmax accuracy over randomly masked positions.
MaskedEval evaluate_masked(const MaskedLm& lm, const std::vector<PhonemeIds>& corpus, double mask_frac,
                           Rng& rng);

struct Sample {
  PhonemeIds ids;
  PhonemeDistSeq dense;
};

/// Gibbs refinement at a fixed length. Starts from init when given (its
/// length must equal target_len), otherwise from uniform random ids. Each
/// sweep visits every position once in random order, masks it and redraws
/// it from the model's conditional; dense holds the last conditional seen
/// at each position.
Sample sample_with_length(const MaskedLm& lm, int target_len, int sweeps, Rng& rng,
                          const std::optional<PhonemeIds>& init = std::nullopt);

/// Mean of -ln p(ids[i] | ids without i) over positions.
double nll_score(const MaskedLm& lm, const PhonemeIds& ids);

enum class RefMode {
  kLengthGuided,  // LM sampling at the utterance's length target
  kFreeLength,    // LM sampling at the seed sentence's own length
  kCorpus,        // the seed sentence itself, one-hot
};

struct RefPoolOptions {
  int a = 5;
  int epochs = 20;
  double p_sil = 0.25;
  int sweeps = 4;
  RefMode mode = RefMode::kLengthGuided;
  int threads = 1;
};

struct RefEntry {
  PhonemeIds ids;
  PhonemeDistSeq dense;
};

struct RefPool {
  std::string config_hash;
  std::map<std::string, std::vector<RefEntry>> entries;
};

/// a × epochs references per utterance. Each starts from a random corpus
/// sentence with silence inserted at word boundaries; in length-guided mode
/// it is then cut to the utterance's target, or extended with further corpus
/// sentences and cut, before Gibbs refinement. Every utterance draws from its
/// own stream derived from (seed, id), so pools are independent of thread
/// count.
RefPool build_ref_pool(const MaskedLm* lm, const std::vector<Sentence>& corpus, int sil,
                       const std::vector<std::string>& utterance_ids,
                       const std::map<std::string, int>& length_targets, const RefPoolOptions& opt,
                       std::uint64_t seed);

/// "DGUR" file: version, config hash, utterance count, then per utterance
/// its id, entry count and for each entry the id sequence and dense matrix.
void write_ref_pool(const std::filesystem::path& path, const RefPool& pool);
RefPool read_ref_pool(const std::filesystem::path& path);

// ---------------------------------------------------------------------------

namespace detail {

template <typename Ctx>
typename Ctx::Value layer_norm(Ctx& ctx, const typename Ctx::Value& x, const std::string& prefix) {
  const Index L = x.rows(), C = x.cols();
  const double inv_c = 1.0 / static_cast<double>(C);
  const auto mu = scale(sum_cols(x), inv_c);
  const auto xc = sub(x, broadcast_cols(mu, C));
  const auto var = scale(sum_cols(mul(xc, xc)), inv_c);
  const auto inv = rsqrt(add_scalar(var, 1e-5));
  const auto y = mul(xc, broadcast_cols(inv, C));
  return add_rowvec(mul(y, broadcast_rows(ctx.param(prefix + ".gain"), L)), ctx.param(prefix + ".bias"));
}

template <typename Ctx>
typename Ctx::Value dense(Ctx& ctx, const typename Ctx::Value& x, const std::string& prefix) {
  return add_rowvec(matmul(x, ctx.param(prefix + ".w")), ctx.param(prefix + ".b"));
}

}  // namespace detail

template <typename Ctx>
typename Ctx::Value MaskedLm::logits(Ctx& ctx, const PhonemeIds& ids) const {
  using detail::dense;
  using detail::layer_norm;
  const Index L = static_cast<Index>(ids.size());
  if (L == 0) throw InputError("empty phoneme sequence");
  for (int id : ids)
    if (id < 0 || id > mask_id()) throw InputError("phoneme id " + std::to_string(id) + " outside vocabulary");

  auto x = add(gather_rows(ctx.param("lm.embed"), ids), ctx.constant(sinusoidal_positions(L, width_)));
  const int dh = width_ / heads_;
  const double att_scale = 1.0 / std::sqrt(static_cast<double>(dh));
  for (int b = 0; b < blocks_; ++b) {
    const std::string p = "lm.block" + std::to_string(b);
    const auto h = layer_norm(ctx, x, p + ".ln1");
    const auto q = dense(ctx, h, p + ".q");
    const auto k = dense(ctx, h, p + ".k");
    const auto v = dense(ctx, h, p + ".v");
    std::vector<typename Ctx::Value> outs;
    for (int hd = 0; hd < heads_; ++hd) {
      const auto qh = slice_cols(q, hd * dh, dh);
      const auto kh = slice_cols(k, hd * dh, dh);
      const auto vh = slice_cols(v, hd * dh, dh);
      const auto att = softmax_rows(scale(matmul(qh, transpose(kh)), att_scale));
      outs.push_back(matmul(att, vh));
    }
    x = add(x, dense(ctx, concat_cols(outs), p + ".o"));
    const auto h2 = layer_norm(ctx, x, p + ".ln2");
    const auto f = leaky_relu(dense(ctx, h2, p + ".ff1"), 0.0);
    x = add(x, dense(ctx, f, p + ".ff2"));
  }
  return dense(ctx, layer_norm(ctx, x, "lm.lnf"), "lm.out");
}

}  // namespace dgu::lm
