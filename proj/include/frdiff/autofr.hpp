// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "frdiff/reuse.hpp"

namespace frdiff {

struct AutoFrConfig {
  double cost_lambda = 1e-3;
  double lr = 5e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  int iterations = 100;
  // Noise seeds per optimiser step: seed, seed + 1, ..., seed + batch - 1.
  int batch = 4;
  std::uint64_t seed = 0;
  double theta_init = 0.5;
  unsigned threads = 1;
};

// Per-iteration gate logits. theta[0] belongs to iteration 1 and is pinned at
// +infinity; it is never optimised.
struct GateParams {
  std::vector<double> theta;

  static GateParams init(int steps, double theta_init);
  int steps() const { return static_cast<int>(theta.size()); }
  // {n : theta_n >= 0}
  KeyframeSet keyframes() const;
  // Hard gate values round(sigmoid(theta)) as untracked scalars.
  std::vector<Tensor> hard_gates() const;
};

// sum_n ReLU(sigmoid(theta_n) - 1/2), zero slope at the kink.
double cost_loss(std::span<const double> theta);
// Same on a tracked tensor of logits.
Tensor cost_loss(const Tensor& theta);

// memory <- a * S(x) + (1 - a) * memory, or memory <- S(x) when the memory is
// still empty; returns f(memory) + x.
Tensor gated_forward(const ResidualBlock& block, const Tensor& x, const Conditioning& cond,
                     const Tensor& gate, Tensor& memory);

// E <- a * eps + (1 - a) * E (E <- eps when empty), then returns
// lambda * eps + (1 - lambda) * E using the updated E.
Tensor gated_score_memory(const Tensor& eps, Tensor& memory, const Tensor& gate, double lambda);

// Differentiable DDIM trajectory with gated feature and score memories.
// gates[n - 1] is the gate of iteration n; the first iteration always stores.
// Gates may hold any real value, which relaxes the rounding for gradient checks.
Tensor gated_sample(const ScoreNetwork& net, const NoiseSchedule& schedule,
                    const SamplerConfig& config, const MixingSchedule& mixing,
                    const std::vector<Tensor>& gates, const ReuseScope& scope = {});

struct AutoFrRecord {
  int iteration = 0;
  double total = 0.0;
  double fidelity = 0.0;  // mean over seeds of ||x_gt - x_hat||^2
  double cost = 0.0;
  int keyframes = 0;
};

struct AutoFrResult {
  GateParams gates;
  KeyframeSet keyframes;
  // Entry k is evaluated with the logits after k updates; the last entry
  // follows the final update.
  std::vector<AutoFrRecord> history;
  std::vector<std::vector<double>> theta_history;
};

// Adam on the gate logits only; the network is frozen. Ground-truth samples
// come from full-computation sampling of each seed and are also written to
// `ground_truth_dir` when given. A non-finite loss throws NumericalError.
AutoFrResult autofr_search(const ScoreNetwork& net, const NoiseSchedule& schedule,
                           const SamplerConfig& sampler, const MixingSchedule& mixing,
                           const AutoFrConfig& config, const ReuseScope& scope = {},
                           const std::optional<std::filesystem::path>& ground_truth_dir = {});

void write_autofr_csvs(const std::filesystem::path& dir, const AutoFrResult& result);

}  // namespace frdiff
