// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

#include "frdiff/sampler.hpp"

namespace frdiff {

// Sampling iterations (1-based, noisiest first) at which every layer is
// recomputed. Always contains 1.
class KeyframeSet {
 public:
  KeyframeSet(int steps, std::vector<int> members);

  // {1, 1 + M, 1 + 2M, ...} within [1, N].
  static KeyframeSet uniform(int steps, int interval);
  static KeyframeSet all(int steps) { return uniform(steps, 1); }

  int steps() const { return steps_; }
  const std::vector<int>& members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  bool contains(int iteration) const;

 private:
  int steps_;
  std::vector<int> members_;
};

// Hard-sigmoid weight of the freshly computed score:
// lambda(n) = clamp((tau * (n / N - bias) + 2) / 4, 0, 1). Disabled mixing is
// lambda = 1 everywhere.
struct MixingSchedule {
  double tau = 30.0;
  double bias = 0.5;
  bool enabled = true;
};

double lambda_of(int iteration, int steps, const MixingSchedule& mixing);

// lambda * eps_fr + (1 - lambda) * memory; lambda = 1 and lambda = 0 return
// one operand unchanged. eps_fr may be null only when lambda = 0.
Tensor mixed_score(const Tensor* eps_fr, const Tensor& memory, double lambda);

// Block kinds whose prefix is cached; the rest are always recomputed.
class ReuseScope {
 public:
  ReuseScope();  // every kind
  ReuseScope(std::initializer_list<BlockKind> kinds);
  static ReuseScope parse(const std::vector<std::string>& names);

  bool contains(BlockKind kind) const { return (mask_ >> static_cast<int>(kind)) & 1u; }
  std::vector<std::string> names() const;

 private:
  unsigned mask_ = 0;
};

struct ReuseCache {
  struct Branch {
    std::vector<Tensor> memory;  // per layer, undefined until the first keyframe
    Tensor score;                // E for this branch
  };
  std::vector<Branch> branches;  // ordered as branch_labels()
  Tensor guided_score;           // combined E
  int last_keyframe = 0;

  ReuseCache(std::size_t branch_count, std::size_t layers);
};

// Keyframe: memory <- S(x). Otherwise the stored memory is used. Either way
// the suffix sees the current conditioning. Throws ContractError when a
// non-keyframe finds no memory.
Tensor reuse_forward(const ResidualBlock& block, const Tensor& x, const Conditioning& cond,
                     bool keyframe, Tensor& memory);

class ReuseExecutor : public BlockExecutor {
 public:
  ReuseExecutor(ReuseCache::Branch& branch, bool keyframe, const ReuseScope& scope)
      : branch_(branch), keyframe_(keyframe), scope_(scope) {}

  Tensor run(std::size_t layer, const ResidualBlock& block, const Tensor& x,
             const Conditioning& cond) override;

  std::uint64_t prefixes_executed() const { return executed_; }
  std::uint64_t prefixes_skipped() const { return skipped_; }

 private:
  ReuseCache::Branch& branch_;
  bool keyframe_;
  const ReuseScope& scope_;
  std::uint64_t executed_ = 0;
  std::uint64_t skipped_ = 0;
};

class FeatureReuseHook : public ScoreHook {
 public:
  FeatureReuseHook(const SamplerConfig& config, KeyframeSet keyframes, MixingSchedule mixing,
                   ReuseScope scope = {});

  Tensor score(const ScoreNetwork& net, const StepContext& ctx, const Tensor& x,
               StepRecord& record) override;

  const ReuseCache* cache() const { return cache_.empty() ? nullptr : &cache_.front(); }

 private:
  SamplerConfig config_;
  KeyframeSet keyframes_;
  MixingSchedule mixing_;
  ReuseScope scope_;
  std::vector<ReuseCache> cache_;  // holds at most one, created on the first step
};

Trajectory frdiff_sample(const ScoreNetwork& net, const NoiseSchedule& schedule,
                         const SamplerConfig& config, const KeyframeSet& keyframes,
                         const MixingSchedule& mixing, const ReuseScope& scope = {});

// CSV: iteration,is_keyframe,lambda,network_evals,s_ops_executed,s_ops_skipped,wallclock_ms
void write_cost_ledger(const std::filesystem::path& path, const Trajectory& traj);

}  // namespace frdiff
