// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "frdiff/network.hpp"
#include "frdiff/schedule.hpp"

namespace frdiff {

enum class Solver { ddim, ddpm };

std::string_view solver_name(Solver solver);
Solver parse_solver(std::string_view name);

struct SamplerConfig {
  int steps = 50;
  Solver solver = Solver::ddim;
  double guidance_weight = 1.0;
  std::uint64_t seed = 0;
  // kUnconditional samples the null class with a single branch.
  int class_label = 0;
};

// Labels evaluated per step, conditional first. Guidance needs a second,
// unconditional branch only when w != 0 and a class is requested.
std::vector<int> branch_labels(const SamplerConfig& config);
// Guided score from per-branch scores ordered as branch_labels().
Tensor combine_branches(const std::vector<Tensor>& scores, const SamplerConfig& config);

struct StepContext {
  int iteration = 0;  // 1..N, noisiest first
  int steps = 0;
  int time = 0;
  int time_prev = 0;
};

struct StepRecord {
  int iteration = 0;
  int time = 0;
  int time_prev = 0;
  bool keyframe = true;
  double lambda = 1.0;
  int network_evals = 0;
  std::uint64_t s_ops_executed = 0;
  std::uint64_t s_ops_skipped = 0;
  std::uint64_t ops = 0;
  double wallclock_ms = 0.0;
};

struct Trajectory {
  std::vector<Tensor> states;  // x at t_1, ..., t_N, then the final sample
  Tensor final_sample;
  std::vector<StepRecord> steps;
  std::uint64_t total_ops = 0;
  double wallclock_ms = 0.0;
};

// Produces the guided score for one step; fills the evaluation fields of the
// record. A hook that cannot honour its schedule throws ContractError.
class ScoreHook {
 public:
  virtual ~ScoreHook() = default;
  virtual Tensor score(const ScoreNetwork& net, const StepContext& ctx, const Tensor& x,
                       StepRecord& record) = 0;
};

// Plain evaluation of every branch with every block recomputed.
class FullScore : public ScoreHook {
 public:
  explicit FullScore(const SamplerConfig& config) : config_(config) {}
  Tensor score(const ScoreNetwork& net, const StepContext& ctx, const Tensor& x,
               StepRecord& record) override;

 private:
  SamplerConfig config_;
};

Tensor initial_noise(const ScoreNetwork& net, std::uint64_t seed);

// Runs the solver over `times` (default sampling_times(T, N)), ending at t = 0.
// Operation counts cover the score computation only.
Trajectory sample(const ScoreNetwork& net, const NoiseSchedule& schedule,
                  const SamplerConfig& config, ScoreHook* hook = nullptr,
                  std::optional<std::vector<int>> times = std::nullopt);

}  // namespace frdiff
