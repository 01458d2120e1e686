// src/diffusion/diffusion.cpp

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

#include "dgu/diffusion/diffusion.hpp"

#include <algorithm>

namespace dgu::diffusion {

namespace {

int sign(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

DiffusionSchedule::DiffusionSchedule(const ScheduleConfig& cfg)
    : t_live_(cfg.t_min), t_min_(cfg.t_min), t_max_(cfg.t_max), d_target_(cfg.d_target) {
  if (!(cfg.beta_0 > 0.0 && cfg.beta_0 < cfg.beta_T && cfg.beta_T < 1.0))
    throw ConfigError("schedule: need 0 < beta_0 < beta_T < 1");
  if (cfg.t_min < 0 || cfg.t_max < 1 || cfg.t_min > cfg.t_max)
    throw ConfigError("schedule: need 0 <= T_min <= T_max and T_max >= 1");
  if (cfg.batch < 1 || cfg.interval < 1 || !(cfg.divisor > 0.0))
    throw ConfigError("schedule: controller step terms must be positive");
  step_ = static_cast<double>(cfg.batch) * cfg.interval / cfg.divisor;

  beta_.assign(static_cast<std::size_t>(cfg.t_max) + 1, 0.0);
  alpha_bar_.assign(static_cast<std::size_t>(cfg.t_max) + 1, 1.0);
  for (int t = 1; t <= cfg.t_max; ++t) {
    const double frac = cfg.t_max == 1 ? 0.0 : static_cast<double>(t - 1) / (cfg.t_max - 1);
    beta_[t] = cfg.beta_0 + (cfg.beta_T - cfg.beta_0) * frac;
    alpha_bar_[t] = alpha_bar_[t - 1] * (1.0 - beta_[t]);
  }
}

double DiffusionSchedule::beta(int t) const {
  if (t < 1 || t > t_max_) throw InputError("beta: t=" + std::to_string(t) + " outside [1, T_max]");
  return beta_[static_cast<std::size_t>(t)];
}

double DiffusionSchedule::alpha_bar(int t) const {
  if (t < 0 || t > t_max_) throw InputError("alpha_bar: t=" + std::to_string(t) + " outside [0, T_max]");
  return alpha_bar_[static_cast<std::size_t>(t)];
}

void DiffusionSchedule::update(double r_d) {
  t_live_ += sign(r_d - d_target_) * step_;
  t_live_ = std::clamp(t_live_, static_cast<double>(t_min_), static_cast<double>(t_max_));
}

DiffusionSchedule make_schedule(const ScheduleConfig& cfg) { return DiffusionSchedule(cfg); }

void check_timestep(const DiffusionSchedule& schedule, int t) {
  if (t < 0 || t > schedule.horizon())
    throw InputError("diffuse: t=" + std::to_string(t) + " outside [0, " +
                     std::to_string(schedule.horizon()) + "]");
}

Var diffuse(const Var& x, int t, const DiffusionSchedule& schedule, Rng& rng) {
  check_timestep(schedule, t);
  if (t == 0) return x;
  const double ab = schedule.alpha_bar(t);
  const Matrix noise = standard_normal(x.rows(), x.cols(), rng);
  return add(scale(x, std::sqrt(ab)), x.tape().constant(noise * std::sqrt(1.0 - ab)));
}

std::vector<int> sample_t(const DiffusionSchedule& schedule, int n, Rng& rng) {
  if (n < 1) throw InputError("sample_t: n must be positive");
  std::uniform_int_distribution<int> u(0, schedule.horizon());
  std::vector<int> out(static_cast<std::size_t>(n));
  for (int& t : out) t = u(rng);
  return out;
}

double estimate_rd(std::span<const double> scores) {
  if (scores.empty()) throw InputError("estimate_rd: empty batch");
  double s = 0.0;
  for (double v : scores) s += sign(v - 0.5);
  return s / static_cast<double>(scores.size());
}

}  // namespace dgu::diffusion
