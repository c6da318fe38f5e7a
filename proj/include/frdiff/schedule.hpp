// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "frdiff/tensor.hpp"

namespace frdiff {

/// Discrete-time variance schedule over diffusion times 1..T.
///
/// alpha_bar(0) == 1 by convention so the last sampling step lands on the
/// clean sample.
class NoiseSchedule {
 public:
  // Linearly spaced betas over t = 1..T.
  static NoiseSchedule linear(int horizon, double beta_start, double beta_end);
  // Arbitrary betas for t = 1..betas.size(); each must lie in (0, 1).
  static NoiseSchedule from_betas(std::vector<double> betas);

  int horizon() const { return static_cast<int>(betas_.size()); }
  double beta(int t) const;
  double alpha(int t) const { return 1.0 - beta(t); }
  double alpha_bar(int t) const;

 private:
  std::vector<double> betas_;      // betas_[t - 1]
  std::vector<double> alpha_bar_;  // alpha_bar_[t], t in [0, T]
};

// Diffusion times visited by an N-step sampler, noisiest first:
// t_n = floor((N - n + 1) * T / N) for n = 1..N. A stride-m subsequence of
// the N-step times equals the (N/m)-step times when m divides N.
std::vector<int> sampling_times(int horizon, int steps);

// Deterministic DDIM update between two cumulative alphas.
Tensor ddim_update(const Tensor& x_t, const Tensor& eps, double alpha_bar_t,
                   double alpha_bar_prev);
// Requires t > t_prev >= 0.
Tensor ddim_step(const Tensor& x_t, const Tensor& eps, int t, int t_prev,
                 const NoiseSchedule& schedule);
// Ancestral (eta = 1) update; `noise` is standard normal of the same shape.
Tensor ddpm_step(const Tensor& x_t, const Tensor& eps, int t, int t_prev,
                 const NoiseSchedule& schedule, const Tensor& noise);

// (1 + w) * cond - w * uncond, evaluated as cond + w * (cond - uncond).
Tensor cfg_combine(const Tensor& cond, const Tensor& uncond, double w);

}  // namespace frdiff
