// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "frdiff/sampler.hpp"

#include <chrono>
#include <string>

#include "frdiff/errors.hpp"
#include "frdiff/op_counter.hpp"
#include "frdiff/rng.hpp"

namespace frdiff {

std::string_view solver_name(Solver solver) { return solver == Solver::ddim ? "ddim" : "ddpm"; }

Solver parse_solver(std::string_view name) {
  if (name == "ddim") return Solver::ddim;
  if (name == "ddpm") return Solver::ddpm;
  throw ConfigError("unknown solver '" + std::string(name) + "'");
}

std::vector<int> branch_labels(const SamplerConfig& config) {
  if (config.guidance_weight < 0.0) throw ConfigError("guidance weight must be >= 0");
  if (config.class_label == kUnconditional || config.guidance_weight == 0.0) {
    return {config.class_label};
  }
  return {config.class_label, kUnconditional};
}

Tensor combine_branches(const std::vector<Tensor>& scores, const SamplerConfig& config) {
  if (scores.size() == 1) return scores.front();
  if (scores.size() != 2) throw ContractError("expected one or two score branches");
  return cfg_combine(scores[0], scores[1], config.guidance_weight);
}

Tensor FullScore::score(const ScoreNetwork& net, const StepContext& ctx, const Tensor& x,
                        StepRecord& record) {
  std::vector<Tensor> eps;
  for (int label : branch_labels(config_)) eps.push_back(net.forward(x, ctx.time, label));
  record.network_evals = static_cast<int>(eps.size());
  record.s_ops_executed = net.layer_count() * eps.size();
  return combine_branches(eps, config_);
}

Tensor initial_noise(const ScoreNetwork& net, std::uint64_t seed) {
  return noise_tensor(net.sample_shape(), seed);
}

Trajectory sample(const ScoreNetwork& net, const NoiseSchedule& schedule,
                  const SamplerConfig& config, ScoreHook* hook,
                  std::optional<std::vector<int>> times) {
  using Clock = std::chrono::steady_clock;
  std::vector<int> ts = times ? std::move(*times) : sampling_times(schedule.horizon(), config.steps);
  if (ts.empty()) throw ConfigError("sampler needs at least one step");
  branch_labels(config);
  FullScore plain(config);
  ScoreHook& scorer = hook != nullptr ? *hook : plain;
  Rng ddpm_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  Trajectory traj;
  Tensor x = initial_noise(net, config.seed);
  const auto start = Clock::now();
  const int n_steps = static_cast<int>(ts.size());
  for (int n = 1; n <= n_steps; ++n) {
    StepContext ctx{n, n_steps, ts[n - 1], n < n_steps ? ts[n] : 0};
    StepRecord rec;
    rec.iteration = n;
    rec.time = ctx.time;
    rec.time_prev = ctx.time_prev;
    traj.states.push_back(x);

    const auto step_start = Clock::now();
    Tensor eps;
    {
      OpCountScope ops;
      eps = scorer.score(net, ctx, x, rec);
      rec.ops = ops.elapsed();
    }
    if (config.solver == Solver::ddim) {
      x = ddim_step(x, eps, ctx.time, ctx.time_prev, schedule);
    } else {
      x = ddpm_step(x, eps, ctx.time, ctx.time_prev, schedule,
                    normal_tensor(net.sample_shape(), ddpm_rng));
    }
    rec.wallclock_ms = std::chrono::duration<double, std::milli>(Clock::now() - step_start).count();
    traj.total_ops += rec.ops;
    traj.steps.push_back(rec);
  }
  traj.wallclock_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  traj.states.push_back(x);
  traj.final_sample = x;
  return traj;
}

}  // namespace frdiff
