// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "frdiff/reuse.hpp"

#include <algorithm>
#include <fstream>

#include "frdiff/errors.hpp"
#include "frdiff/ops.hpp"

namespace frdiff {

KeyframeSet::KeyframeSet(int steps, std::vector<int> members)
    : steps_(steps), members_(std::move(members)) {
  if (steps < 1) throw ConfigError("keyframes: step count must be >= 1");
  std::sort(members_.begin(), members_.end());
  members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
  if (members_.empty() || members_.front() != 1) {
    throw ConfigError("keyframes must include iteration 1");
  }
  if (members_.back() > steps) {
    throw ConfigError("keyframe " + std::to_string(members_.back()) + " exceeds " +
                      std::to_string(steps) + " steps");
  }
}

KeyframeSet KeyframeSet::uniform(int steps, int interval) {
  if (interval < 1) throw ConfigError("FR interval must be >= 1");
  if (steps < 1) throw ConfigError("keyframes: step count must be >= 1");
  std::vector<int> m;
  for (int n = 1; n <= steps; n += interval) m.push_back(n);
  return KeyframeSet(steps, std::move(m));
}

bool KeyframeSet::contains(int iteration) const {
  return std::binary_search(members_.begin(), members_.end(), iteration);
}

double lambda_of(int iteration, int steps, const MixingSchedule& mixing) {
  if (!mixing.enabled) return 1.0;
  const double u = static_cast<double>(iteration) / steps;
  return std::clamp((mixing.tau * (u - mixing.bias) + 2.0) / 4.0, 0.0, 1.0);
}

Tensor mixed_score(const Tensor* eps_fr, const Tensor& memory, double lambda) {
  if (lambda == 0.0) return memory;
  if (eps_fr == nullptr || !eps_fr->defined()) {
    throw ContractError("score mixing with lambda > 0 needs a fresh score");
  }
  if (lambda == 1.0) return *eps_fr;
  return ops::add(ops::scale(*eps_fr, lambda), ops::scale(memory, 1.0 - lambda));
}

ReuseScope::ReuseScope() : mask_(0b1111u) {}

ReuseScope::ReuseScope(std::initializer_list<BlockKind> kinds) {
  for (BlockKind k : kinds) mask_ |= 1u << static_cast<int>(k);
}

ReuseScope ReuseScope::parse(const std::vector<std::string>& names) {
  ReuseScope s(std::initializer_list<BlockKind>{});
  for (const auto& n : names) {
    if (n == "all") return ReuseScope();
    s.mask_ |= 1u << static_cast<int>(parse_block_kind(n));
  }
  return s;
}

std::vector<std::string> ReuseScope::names() const {
  std::vector<std::string> out;
  for (BlockKind k : {BlockKind::resnet, BlockKind::spatial_transformer, BlockKind::dit_attention,
                      BlockKind::dit_feedforward}) {
    if (contains(k)) out.emplace_back(block_kind_name(k));
  }
  return out;
}

ReuseCache::ReuseCache(std::size_t branch_count, std::size_t layers) : branches(branch_count) {
  for (auto& b : branches) b.memory.resize(layers);
}

Tensor reuse_forward(const ResidualBlock& block, const Tensor& x, const Conditioning& cond,
                     bool keyframe, Tensor& memory) {
  if (keyframe) {
    memory = block.prefix(x, cond);
  } else if (!memory.defined()) {
    throw ContractError("feature reuse requested before any keyframe stored this layer");
  }
  return ops::add(block.suffix(memory, cond), x);
}

Tensor ReuseExecutor::run(std::size_t layer, const ResidualBlock& block, const Tensor& x,
                          const Conditioning& cond) {
  if (!scope_.contains(block.kind())) {
    ++executed_;
    return block.forward(x, cond);
  }
  keyframe_ ? ++executed_ : ++skipped_;
  return reuse_forward(block, x, cond, keyframe_, branch_.memory.at(layer));
}

FeatureReuseHook::FeatureReuseHook(const SamplerConfig& config, KeyframeSet keyframes,
                                   MixingSchedule mixing, ReuseScope scope)
    : config_(config), keyframes_(std::move(keyframes)), mixing_(mixing), scope_(scope) {
  if (keyframes_.steps() != config_.steps) {
    throw ConfigError("keyframe set was built for " + std::to_string(keyframes_.steps()) +
                      " steps, sampler runs " + std::to_string(config_.steps));
  }
}

Tensor FeatureReuseHook::score(const ScoreNetwork& net, const StepContext& ctx, const Tensor& x,
                               StepRecord& record) {
  const std::vector<int> labels = branch_labels(config_);
  if (cache_.empty()) cache_.emplace_back(labels.size(), net.layer_count());
  ReuseCache& cache = cache_.front();
  const bool keyframe = keyframes_.contains(ctx.iteration);
  const double lambda = lambda_of(ctx.iteration, ctx.steps, mixing_);
  record.keyframe = keyframe;
  record.lambda = lambda;
  const std::uint64_t would_run = net.layer_count() * labels.size();

  if (!keyframe && lambda == 0.0) {
    if (!cache.guided_score.defined()) throw ContractError("score memory is empty");
    record.network_evals = 0;
    record.s_ops_executed = 0;
    record.s_ops_skipped = would_run;
    return cache.guided_score;
  }

  std::vector<Tensor> scores;
  for (std::size_t b = 0; b < labels.size(); ++b) {
    ReuseCache::Branch& branch = cache.branches[b];
    ReuseExecutor exec(branch, keyframe, scope_);
    Tensor eps = net.forward(x, ctx.time, labels[b], &exec);
    record.s_ops_executed += exec.prefixes_executed();
    record.s_ops_skipped += exec.prefixes_skipped();
    if (keyframe) {
      branch.score = eps;
      scores.push_back(eps);
    } else {
      scores.push_back(mixed_score(&eps, branch.score, lambda));
    }
  }
  record.network_evals = static_cast<int>(labels.size());
  Tensor guided = combine_branches(scores, config_);
  if (keyframe) {
    cache.guided_score = guided;
    cache.last_keyframe = ctx.iteration;
  }
  return guided;
}

Trajectory frdiff_sample(const ScoreNetwork& net, const NoiseSchedule& schedule,
                         const SamplerConfig& config, const KeyframeSet& keyframes,
                         const MixingSchedule& mixing, const ReuseScope& scope) {
  FeatureReuseHook hook(config, keyframes, mixing, scope);
  return sample(net, schedule, config, &hook);
}

void write_cost_ledger(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(10);
  out << "iteration,is_keyframe,lambda,network_evals,s_ops_executed,s_ops_skipped,wallclock_ms\n";
  for (const auto& r : traj.steps) {
    out << r.iteration << ',' << (r.keyframe ? 1 : 0) << ',' << r.lambda << ',' << r.network_evals
        << ',' << r.s_ops_executed << ',' << r.s_ops_skipped << ',' << r.wallclock_ms << '\n';
  }
}

}  // namespace frdiff
