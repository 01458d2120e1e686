// include/dgu/adversarial/adversarial.hpp

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

#include <span>
#include <string>
#include <vector>

#include "dgu/diffusion/diffusion.hpp"
#include "dgu/numerics/context.hpp"

namespace dgu::adversarial {

inline constexpr double kLeakySlope = 0.2;

struct NetConfig {
  /// Output inventory size, SIL included.
  int vocab = 9;
  /// Segment feature width.
  int d_in = 16;
  int gen_kernel = 5;
  /// Down-path widths w0..w3; the up path is (w3, w2) and the output width w2.
  std::vector<int> unet = {64, 32, 16, 8};
  int disc_hidden = 32;
  int disc_kernel = 3;
  int t_max = 100;
  bool use_unet = true;
  /// Adds a learned per-timestep row to the first discriminator layer.
  bool t_embedding = true;
  /// false: one independent discriminator per timestep instead of one
  /// weight-shared network.
  bool shared = true;

  int disc_input_width() const { return use_unet ? unet.at(2) : vocab; }
  void validate() const;
};

/// Generator parameters go to gen; U-Net and discriminator parameters both
/// belong to the discriminator's store.
void init_generator(ParamStore& gen, const NetConfig& cfg, Rng& rng);
void init_discriminator(ParamStore& disc, const NetConfig& cfg, Rng& rng);

template <typename Ctx>
typename Ctx::Value conv_layer(Ctx& ctx, const typename Ctx::Value& x, const std::string& prefix) {
  return conv1d(x, ctx.param(prefix + ".w"), ctx.param(prefix + ".b"));
}

/// Softmax rows of a single centered convolution over the segments.
template <typename Ctx>
typename Ctx::Value generate(Ctx& ctx, const NetConfig& cfg, const Matrix& segments) {
  if (segments.rows() < 1) throw InputError("generate: empty segment sequence");
  if (segments.cols() != cfg.d_in)
    throw DimensionError("generate: segments " + shape_str(segments) + " but d_in " + std::to_string(cfg.d_in));
  return softmax_rows(conv_layer(ctx, ctx.constant(segments), "gen.conv"));
}

template <typename Ctx>
typename Ctx::Value unet_project(Ctx& ctx, const NetConfig& cfg, const typename Ctx::Value& x) {
  if (x.cols() != cfg.vocab) throw DimensionError("unet_project: input " + shape_str(x.rows(), x.cols()));
  const double s = kLeakySlope;
  const auto d0 = leaky_relu(add_rowvec(matmul(x, ctx.param("unet.in.w")), ctx.param("unet.in.b")), s);
  const auto d1 = leaky_relu(conv_layer(ctx, d0, "unet.down1"), s);
  const auto d2 = leaky_relu(conv_layer(ctx, d1, "unet.down2"), s);
  const auto d3 = leaky_relu(conv_layer(ctx, d2, "unet.down3"), s);
  const auto u1 = add(leaky_relu(conv_layer(ctx, d3, "unet.up1"), s), d3);
  return add(conv_layer(ctx, u1, "unet.up2"), d2);
}

inline std::string disc_prefix(const NetConfig& cfg, int t) {
  return cfg.shared ? std::string("disc") : "disc.t" + std::to_string(t);
}

/// Pre-sigmoid score: mean over positions of the final single-channel layer.
template <typename Ctx>
typename Ctx::Value disc_logit(Ctx& ctx, const NetConfig& cfg, const typename Ctx::Value& y, int t) {
  if (t < 0 || t > cfg.t_max)
    throw InputError("discriminate: timestep " + std::to_string(t) + " outside [0, " +
                     std::to_string(cfg.t_max) + "]");
  if (y.cols() != cfg.disc_input_width())
    throw DimensionError("discriminate: input " + shape_str(y.rows(), y.cols()));
  const std::string p = disc_prefix(cfg, t);
  auto h1 = conv_layer(ctx, y, p + ".conv1");
  if (cfg.t_embedding && cfg.shared) {
    const int row[] = {t};
    h1 = add(h1, broadcast_rows(gather_rows(ctx.param(p + ".temb"), row), y.rows()));
  }
  const auto a1 = leaky_relu(h1, kLeakySlope);
  const auto a2 = leaky_relu(conv_layer(ctx, a1, p + ".conv2"), kLeakySlope);
  return mean_rows(conv_layer(ctx, a2, p + ".conv3"));
}

/// Probability in [eps, 1 - eps].
template <typename Ctx>
typename Ctx::Value discriminate(Ctx& ctx, const NetConfig& cfg, const typename Ctx::Value& y, int t,
                                 double eps = kBceEpsilon) {
  return clamp(sigmoid(disc_logit(ctx, cfg, y, t)), eps, 1.0 - eps);
}

/// Negative entropy of each output's row-averaged distribution, averaged
/// over the batch.
template <typename Value>
Value phoneme_diversity(const std::vector<Value>& outputs) {
  if (outputs.empty()) throw InputError("phoneme_diversity: empty batch");
  Value total;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const Value p = mean_rows(outputs[i]);
    // p log p with p clamped inside the log only, so exact zeros contribute 0.
    const Value neg_h = sum(mul(p, log(clamp(p, 1e-300, 1.0))));
    total = i == 0 ? neg_h : add(total, neg_h);
  }
  return scale(total, 1.0 / static_cast<double>(outputs.size()));
}

/// Sum over adjacent rows of the squared Euclidean distance.
template <typename Value>
Value smoothness_penalty(const Value& output) {
  const Index L = output.rows();
  if (L < 1) throw InputError("smoothness_penalty: empty sequence");
  const Value diff = sub(slice_rows(output, 1, L - 1), slice_rows(output, 0, L - 1));
  return sum(mul(diff, diff));
}

/// (|grad_y score(y~)| - 1)^2 at y~ = alpha real + (1 - alpha) fake, alpha ~ U(0,1),
/// after cutting both to the shorter length. The interpolate is a fresh leaf;
/// the returned node stays differentiable in the parameters behind score.
template <typename ScoreFn>
Var gradient_penalty(ScoreFn&& score, const Var& real, const Var& fake, Rng& rng) {
  const Index len = std::min(real.rows(), fake.rows());
  if (len < 1) throw InputError("gradient_penalty: zero-length overlap");
  if (real.cols() != fake.cols()) throw DimensionError("gradient_penalty: width mismatch");
  const double alpha = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  Tape& tape = real.tape();
  const Matrix mix = dgu::add(dgu::scale(Matrix(real.value().topRows(len)), alpha),
                              dgu::scale(Matrix(fake.value().topRows(len)), 1.0 - alpha));
  const Var y = tape.leaf(mix);
  const Var s = score(y);
  const Var g = tape.grad(s, std::span<const Var>(&y, 1), true)[0];
  const Var dev = add_scalar(l2_norm(g), -1.0);
  return mul(dev, dev);
}

struct GanWeights {
  double eta = 1.0;
  double gamma = 1.5;
  double lambda = 1.5;
};

struct GanLossTerms {
  double g_bce = 0.0;
  double l_pd = 0.0;
  double l_sp = 0.0;
  double d_real_bce = 0.0;
  double d_fake_bce = 0.0;
  double l_gp = 0.0;
  double total = 0.0;
};

struct GenItem {
  const Matrix* segments;
  int t;
};

struct DiscItem {
  const Matrix* segments;
  const Matrix* reference;
  int t;
};

struct GenLoss {
  Var loss;
  GanLossTerms terms;
};

struct DiscLoss {
  Var loss;
  GanLossTerms terms;
  /// 1 - C on each diffused reference: the probability of "real" under the
  /// generated-is-1 labelling, fed to the horizon controller.
  std::vector<double> realness;
  /// Pairs whose lengths differed and were cut for the penalty.
  int truncated = 0;
};

/// BCE(C(diffuse(P(G(S)), t)), 0) + eta L_pd + gamma L_sp, batch averaged,
/// with L_pd and L_sp on the undiffused generator output. gen must be
/// trainable and disc frozen for a generator update.
GenLoss loss_generator(TapeContext& gen, TapeContext& disc, const NetConfig& cfg,
                       const diffusion::DiffusionSchedule& schedule, std::span<const GenItem> batch,
                       const GanWeights& w, Rng& noise_rng);

/// BCE(C(fake), 1) + BCE(C(real), 0) + lambda L_gp, batch averaged. Both sides
/// pass through the same projection and are diffused at the item's t.
DiscLoss loss_discriminator(TapeContext& gen, TapeContext& disc, const NetConfig& cfg,
                            const diffusion::DiffusionSchedule& schedule, std::span<const DiscItem> batch,
                            const GanWeights& w, Rng& noise_rng, Rng& gp_rng);

}  // namespace dgu::adversarial
