// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "frdiff/corpus.hpp"
#include "frdiff/network.hpp"
#include "frdiff/schedule.hpp"

namespace frdiff {

struct TrainConfig {
  std::size_t steps = 2000;
  double lr = 2e-3;
  std::size_t batch = 8;
  std::uint64_t seed = 0;
  // Probability of replacing the label with the null class, so the same
  // network also learns the unconditional score used by guidance.
  double cond_drop = 0.1;
};

struct TrainResult {
  std::vector<double> losses;  // one entry per optimiser step
};

// Noise-matching objective: mean over the batch of mean((eps - eps_theta(x_t, t, c))^2)
// with t uniform in [1, T]. Updates `net` in place. A non-finite loss throws
// NumericalError naming the step.
TrainResult train_toy(ScoreNetwork& net, const Dataset& data, const NoiseSchedule& schedule,
                      const TrainConfig& config);

// Noise-matching loss averaged over `samples` fixed draws of (x_0, t, eps)
// determined by `seed`, with true labels; comparable across checkpoints.
double evaluate_loss(const ScoreNetwork& net, const Dataset& data, const NoiseSchedule& schedule,
                     std::size_t samples, std::uint64_t seed);

// CSV with header `step,loss`, steps counted from 1.
void write_loss_csv(const std::filesystem::path& path, const std::vector<double>& losses);

}  // namespace frdiff
