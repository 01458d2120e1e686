// include/dgu/diffusion/diffusion.hpp

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
#include <span>
#include <vector>

#include "dgu/numerics/common.hpp"
#include "dgu/numerics/tape.hpp"

namespace dgu::diffusion {

struct ScheduleConfig {
  double beta_0 = 1e-4;
  double beta_T = 1e-2;
  int t_min = 5;
  int t_max = 100;
  double d_target = 0.6;
  /// Controller step C = batch * interval / divisor.
  int batch = 64;
  int interval = 4;
  double divisor = 100.0;
};

/// Linear beta table over t in [1, t_max], cumulative alpha products over
/// [0, t_max], and the adaptive horizon. The horizon only truncates which
/// timesteps are used; the tables never change.
class DiffusionSchedule {
 public:
  explicit DiffusionSchedule(const ScheduleConfig& cfg);

  double beta(int t) const;
  double alpha_bar(int t) const;
  const std::vector<double>& betas() const { return beta_; }
  const std::vector<double>& alpha_bars() const { return alpha_bar_; }

  /// Usable horizon floor(T_live).
  int horizon() const { return static_cast<int>(std::floor(t_live_)); }
  double t_live() const { return t_live_; }
  int t_min() const { return t_min_; }
  int t_max() const { return t_max_; }
  double d_target() const { return d_target_; }
  double step_size() const { return step_; }

  /// T_live += sign(r_d - d_target) * C, clamped to [t_min, t_max].
  void update(double r_d);

 private:
  std::vector<double> beta_;       // index 0 unused
  std::vector<double> alpha_bar_;  // alpha_bar_[0] = 1
  double t_live_;
  int t_min_;
  int t_max_;
  double d_target_;
  double step_;
};

DiffusionSchedule make_schedule(const ScheduleConfig& cfg);

inline void update_T(DiffusionSchedule& schedule, double r_d) { schedule.update(r_d); }

void check_timestep(const DiffusionSchedule& schedule, int t);

/// y = sqrt(alpha_bar_t) x + sqrt(1 - alpha_bar_t) eps. t = 0 returns x and
/// draws nothing.
template <typename Scalar>
Array2<Scalar> diffuse(const Array2<Scalar>& x, int t, const DiffusionSchedule& schedule, Rng& rng) {
  check_timestep(schedule, t);
  if (t == 0) return x;
  const double ab = schedule.alpha_bar(t);
  const Array2<Scalar> noise = standard_normal(x.rows(), x.cols(), rng).template cast<Scalar>();
  return x * Scalar(std::sqrt(ab)) + noise * Scalar(std::sqrt(1.0 - ab));
}

/// Differentiable in x; consumes the rng exactly like the eager overload.
Var diffuse(const Var& x, int t, const DiffusionSchedule& schedule, Rng& rng);

/// n i.i.d. draws, uniform over [0, horizon].
std::vector<int> sample_t(const DiffusionSchedule& schedule, int n, Rng& rng);

/// Mean of sign(score - 0.5) with sign(0) = 0.
double estimate_rd(std::span<const double> scores);

}  // namespace dgu::diffusion
