// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "frdiff/tensor.hpp"

namespace frdiff {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam. Moment buffers are sized lazily on the first step and
// the parameter list must keep the same layout afterwards.
class Adam {
 public:
  explicit Adam(AdamConfig config) : config_(config) {}

  // Replaces each *params[i] with an untracked updated tensor.
  void step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads);
  // Single flat parameter group.
  void step(std::span<double> params, std::span<const double> grads);

  long steps() const { return t_; }

 private:
  void update(std::size_t group, std::span<double> p, std::span<const double> g);

  AdamConfig config_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  long t_ = 0;
};

}  // namespace frdiff
