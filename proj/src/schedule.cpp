// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "frdiff/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "frdiff/errors.hpp"
#include "frdiff/ops.hpp"

namespace frdiff {

NoiseSchedule NoiseSchedule::linear(int horizon, double beta_start, double beta_end) {
  if (horizon < 1) throw ConfigError("schedule horizon must be >= 1");
  if (!(beta_start > 0.0) || !(beta_end < 1.0) || beta_end < beta_start) {
    throw ConfigError("linear schedule needs 0 < beta_start <= beta_end < 1");
  }
  std::vector<double> betas(horizon);
  for (int i = 0; i < horizon; ++i) {
    const double frac = horizon == 1 ? 0.0 : static_cast<double>(i) / (horizon - 1);
    betas[i] = beta_start + frac * (beta_end - beta_start);
  }
  return from_betas(std::move(betas));
}

NoiseSchedule NoiseSchedule::from_betas(std::vector<double> betas) {
  if (betas.empty()) throw ConfigError("schedule needs at least one beta");
  NoiseSchedule s;
  s.alpha_bar_.assign(betas.size() + 1, 1.0);
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (!(betas[i] > 0.0 && betas[i] < 1.0)) {
      throw ConfigError("beta_" + std::to_string(i + 1) + " outside (0, 1)");
    }
    s.alpha_bar_[i + 1] = s.alpha_bar_[i] * (1.0 - betas[i]);
  }
  s.betas_ = std::move(betas);
  return s;
}

double NoiseSchedule::beta(int t) const {
  if (t < 1 || t > horizon()) throw ContractError("beta index out of range: " + std::to_string(t));
  return betas_[t - 1];
}

double NoiseSchedule::alpha_bar(int t) const {
  if (t < 0 || t > horizon()) {
    throw ContractError("alpha_bar index out of range: " + std::to_string(t));
  }
  return alpha_bar_[t];
}

std::vector<int> sampling_times(int horizon, int steps) {
  if (steps < 1) throw ConfigError("sampling steps must be >= 1");
  if (steps > horizon) throw ConfigError("sampling steps exceed the diffusion horizon");
  std::vector<int> times(steps);
  for (int n = 1; n <= steps; ++n) {
    const long long num = static_cast<long long>(steps - n + 1) * horizon;
    times[n - 1] = static_cast<int>(num / steps);
  }
  return times;
}

Tensor ddim_update(const Tensor& x_t, const Tensor& eps, double alpha_bar_t,
                   double alpha_bar_prev) {
  const double ratio = std::sqrt(alpha_bar_prev / alpha_bar_t);
  const double noise_t = std::sqrt(1.0 - alpha_bar_t);
  const double noise_prev = std::sqrt(1.0 - alpha_bar_prev);
  Tensor denoised = ops::sub(x_t, ops::scale(eps, noise_t));
  return ops::add(ops::scale(denoised, ratio), ops::scale(eps, noise_prev));
}

Tensor ddim_step(const Tensor& x_t, const Tensor& eps, int t, int t_prev,
                 const NoiseSchedule& schedule) {
  if (!(t > t_prev && t_prev >= 0)) {
    throw ContractError("ddim_step needs t > t_prev >= 0, got t=" + std::to_string(t) +
                        " t_prev=" + std::to_string(t_prev));
  }
  return ddim_update(x_t, eps, schedule.alpha_bar(t), schedule.alpha_bar(t_prev));
}

Tensor ddpm_step(const Tensor& x_t, const Tensor& eps, int t, int t_prev,
                 const NoiseSchedule& schedule, const Tensor& noise) {
  if (!(t > t_prev && t_prev >= 0)) throw ContractError("ddpm_step needs t > t_prev >= 0");
  const double ab = schedule.alpha_bar(t);
  const double ab_prev = schedule.alpha_bar(t_prev);
  const double var = (1.0 - ab_prev) / (1.0 - ab) * (1.0 - ab / ab_prev);
  Tensor x0 = ops::scale(ops::sub(x_t, ops::scale(eps, std::sqrt(1.0 - ab))), 1.0 / std::sqrt(ab));
  Tensor mean = ops::add(ops::scale(x0, std::sqrt(ab_prev)),
                         ops::scale(eps, std::sqrt(std::max(0.0, 1.0 - ab_prev - var))));
  return ops::add(mean, ops::scale(noise, std::sqrt(var)));
}

Tensor cfg_combine(const Tensor& cond, const Tensor& uncond, double w) {
  return ops::add(cond, ops::scale(ops::sub(cond, uncond), w));
}

}  // namespace frdiff
