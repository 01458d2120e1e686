// src/adversarial/adversarial.cpp

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

#include "dgu/adversarial/adversarial.hpp"

#include <cmath>

namespace dgu::adversarial {

namespace {

void add_conv(ParamStore& ps, const std::string& prefix, int kernel, int cin, int cout, Rng& rng) {
  const double sd = 1.0 / std::sqrt(static_cast<double>(kernel * cin));
  ps.add(prefix + ".w", standard_normal(kernel * cin, cout, rng) * sd);
  ps.add(prefix + ".b", Matrix::Zero(1, cout));
}

}  // namespace

void NetConfig::validate() const {
  if (vocab < 2) throw ConfigError("vocabulary must have at least two entries");
  if (d_in < 1) throw ConfigError("segment width must be positive");
  if (gen_kernel < 1 || gen_kernel % 2 == 0) throw ConfigError("generator kernel must be odd");
  if (disc_kernel < 1 || disc_kernel % 2 == 0) throw ConfigError("discriminator kernel must be odd");
  if (unet.size() != 4) throw ConfigError("U-Net needs four down-path widths");
  for (int w : unet)
    if (w < 1) throw ConfigError("U-Net widths must be positive");
  if (disc_hidden < 1) throw ConfigError("discriminator width must be positive");
  if (t_max < 0) throw ConfigError("t_max must be nonnegative");
}

void init_generator(ParamStore& gen, const NetConfig& cfg, Rng& rng) {
  cfg.validate();
  add_conv(gen, "gen.conv", cfg.gen_kernel, cfg.d_in, cfg.vocab, rng);
}

void init_discriminator(ParamStore& disc, const NetConfig& cfg, Rng& rng) {
  cfg.validate();
  if (cfg.use_unet) {
    const auto& w = cfg.unet;
    add_conv(disc, "unet.in", 1, cfg.vocab, w[0], rng);
    add_conv(disc, "unet.down1", 3, w[0], w[1], rng);
    add_conv(disc, "unet.down2", 3, w[1], w[2], rng);
    add_conv(disc, "unet.down3", 3, w[2], w[3], rng);
    add_conv(disc, "unet.up1", 3, w[3], w[3], rng);
    add_conv(disc, "unet.up2", 3, w[3], w[2], rng);
  }
  const int din = cfg.disc_input_width(), h = cfg.disc_hidden, k = cfg.disc_kernel;
  const int banks = cfg.shared ? 1 : cfg.t_max + 1;
  for (int b = 0; b < banks; ++b) {
    const std::string p = disc_prefix(cfg, b);
    add_conv(disc, p + ".conv1", k, din, h, rng);
    add_conv(disc, p + ".conv2", k, h, h, rng);
    add_conv(disc, p + ".conv3", k, h, 1, rng);
    if (cfg.shared && cfg.t_embedding) disc.add(p + ".temb", standard_normal(cfg.t_max + 1, h, rng) * 0.1);
  }
}

namespace {

Var project(TapeContext& disc, const NetConfig& cfg, const Var& x) {
  return cfg.use_unet ? unet_project(disc, cfg, x) : x;
}

Var mean_of(const std::vector<Var>& xs) {
  Var total = xs.front();
  for (std::size_t i = 1; i < xs.size(); ++i) total = add(total, xs[i]);
  return scale(total, 1.0 / static_cast<double>(xs.size()));
}

}  // namespace

GenLoss loss_generator(TapeContext& gen, TapeContext& disc, const NetConfig& cfg,
                       const diffusion::DiffusionSchedule& schedule, std::span<const GenItem> batch,
                       const GanWeights& w, Rng& noise_rng) {
  if (batch.empty()) throw InputError("loss_generator: empty batch");
  std::vector<Var> outputs, bces, smooth;
  for (const GenItem& item : batch) {
    const Var p = generate(gen, cfg, *item.segments);
    outputs.push_back(p);
    const Var y = diffusion::diffuse(project(disc, cfg, p), item.t, schedule, noise_rng);
    bces.push_back(bce(discriminate(disc, cfg, y, item.t), 0));
    smooth.push_back(smoothness_penalty(p));
  }
  const Var g_bce = mean_of(bces);
  const Var l_pd = phoneme_diversity(outputs);
  const Var l_sp = mean_of(smooth);
  GenLoss out;
  out.loss = add(add(g_bce, scale(l_pd, w.eta)), scale(l_sp, w.gamma));
  out.terms.g_bce = g_bce.scalar();
  out.terms.l_pd = l_pd.scalar();
  out.terms.l_sp = l_sp.scalar();
  out.terms.total = out.loss.scalar();
  return out;
}

DiscLoss loss_discriminator(TapeContext& gen, TapeContext& disc, const NetConfig& cfg,
                            const diffusion::DiffusionSchedule& schedule, std::span<const DiscItem> batch,
                            const GanWeights& w, Rng& noise_rng, Rng& gp_rng) {
  if (batch.empty()) throw InputError("loss_discriminator: empty batch");
  DiscLoss out;
  std::vector<Var> fakes, reals, gps;
  for (const DiscItem& item : batch) {
    const Var fake = diffusion::diffuse(project(disc, cfg, generate(gen, cfg, *item.segments)), item.t,
                                        schedule, noise_rng);
    const Var real = diffusion::diffuse(project(disc, cfg, disc.constant(*item.reference)), item.t, schedule,
                                        noise_rng);
    const Var c_fake = discriminate(disc, cfg, fake, item.t);
    const Var c_real = discriminate(disc, cfg, real, item.t);
    fakes.push_back(bce(c_fake, 1));
    reals.push_back(bce(c_real, 0));
    out.realness.push_back(1.0 - c_real.scalar());
    if (fake.rows() != real.rows()) ++out.truncated;
    if (w.lambda != 0.0) {
      const int t = item.t;
      gps.push_back(gradient_penalty([&](const Var& y) { return disc_logit(disc, cfg, y, t); }, real, fake, gp_rng));
    }
  }
  const Var d_fake = mean_of(fakes);
  const Var d_real = mean_of(reals);
  out.loss = add(d_fake, d_real);
  out.terms.d_fake_bce = d_fake.scalar();
  out.terms.d_real_bce = d_real.scalar();
  if (!gps.empty()) {
    const Var l_gp = mean_of(gps);
    out.loss = add(out.loss, scale(l_gp, w.lambda));
    out.terms.l_gp = l_gp.scalar();
  }
  out.terms.total = out.loss.scalar();
  return out;
}

}  // namespace dgu::adversarial
