// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "frdiff/errors.hpp"
#include "frdiff/ops.hpp"
#include "frdiff/reuse.hpp"
#include "test_util.hpp"

using namespace frdiff;
using frdiff::testing::random_tensor;

namespace {

NoiseSchedule default_schedule() { return NoiseSchedule::linear(1000, 1e-4, 0.02); }

ScoreNetwork small_net(Arch arch, std::uint64_t seed = 1) {
  ModelConfig c;
  c.arch = arch;
  c.width = 16;
  c.depth = 2;
  c.seed = seed;
  c.time_dim = 32;
  return ScoreNetwork(c);
}

MixingSchedule never_fresh() {
  MixingSchedule m;
  m.bias = 10.0;
  return m;
}

}  // namespace

TEST_CASE("uniform keyframe sets") {
  CHECK(KeyframeSet::uniform(6, 2).members() == std::vector<int>{1, 3, 5});
  CHECK(KeyframeSet::uniform(50, 3).size() == 17);
  CHECK(KeyframeSet::uniform(50, 1).size() == 50);
  CHECK(KeyframeSet::uniform(10, 25).members() == std::vector<int>{1});
  KeyframeSet k(10, {7, 1, 3, 3});
  CHECK(k.members() == std::vector<int>{1, 3, 7});
  CHECK(k.contains(3));
  CHECK(!k.contains(4));
  CHECK_THROWS_AS(KeyframeSet(10, {2, 3}), ConfigError);
  CHECK_THROWS_AS(KeyframeSet(10, {1, 11}), ConfigError);
  CHECK_THROWS_AS(KeyframeSet::uniform(10, 0), ConfigError);
}

TEST_CASE("mixing weight follows the clamped hard sigmoid") {
  const MixingSchedule m;
  for (int N : {10, 20, 40, 50, 64}) {
    for (int n = 1; n <= N; ++n) {
      const double direct = std::clamp((30.0 * (double(n) / N - 0.5) + 2.0) / 4.0, 0.0, 1.0);
      CHECK(lambda_of(n, N, m) == direct);
    }
  }
  CHECK(lambda_of(25, 50, m) == 0.5);
  CHECK(lambda_of(20, 40, m) == 0.5);
  CHECK(lambda_of(1, 50, m) == 0.0);
  CHECK(lambda_of(21, 50, m) == 0.0);
  CHECK(lambda_of(22, 50, m) > 0.0);
  CHECK(lambda_of(28, 50, m) < 1.0);
  CHECK(lambda_of(29, 50, m) == 1.0);
  CHECK(lambda_of(50, 50, m) == 1.0);
  MixingSchedule off;
  off.enabled = false;
  for (int n = 1; n <= 10; ++n) CHECK(lambda_of(n, 10, off) == 1.0);
}

TEST_CASE("mixed score endpoints") {
  Tensor e = random_tensor({4}, 1), mem = random_tensor({4}, 2);
  CHECK(mixed_score(&e, mem, 1.0).shares_storage(e));
  CHECK(mixed_score(nullptr, mem, 0.0).shares_storage(mem));
  Tensor half = mixed_score(&e, mem, 0.5);
  for (std::size_t i = 0; i < 4; ++i) CHECK(half[i] == doctest::Approx(0.5 * (e[i] + mem[i])));
  CHECK_THROWS_AS(mixed_score(nullptr, mem, 0.3), ContractError);
}

TEST_CASE("reuse_forward keyframe stores the prefix and matches forward") {
  for (Arch arch : {Arch::toy_unet, Arch::toy_dit}) {
    ScoreNetwork net = small_net(arch);
    for (std::size_t i = 0; i < net.layer_count(); ++i) {
      const ResidualBlock& b = net.block(i);
      Tensor h = net.embed(random_tensor(net.sample_shape(), i));
      Conditioning c = net.condition(700, 0);
      Tensor memory;
      CHECK_THROWS_AS(reuse_forward(b, h, c, false, memory), ContractError);
      CHECK(bit_equal(reuse_forward(b, h, c, true, memory), b.forward(h, c)));
      CHECK(bit_equal(memory, b.prefix(h, c)));

      Tensor h2 = net.embed(random_tensor(net.sample_shape(), 50 + i));
      Conditioning c2 = net.condition(650, 0);
      Tensor stored = memory;
      Tensor out = reuse_forward(b, h2, c2, false, memory);
      CHECK(memory.shares_storage(stored));
      CHECK(bit_equal(out, ops::add(b.suffix(stored, c2), h2)));
    }
  }
}

TEST_CASE("DiT non-keyframe output is the new gate times the stored prefix plus the input") {
  ScoreNetwork net = small_net(Arch::toy_dit);
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    const ResidualBlock& b = net.block(i);
    Tensor memory;
    reuse_forward(b, net.embed(random_tensor(net.sample_shape(), 3)), net.condition(800, 1), true,
                  memory);
    Tensor x2 = net.embed(random_tensor(net.sample_shape(), 4));
    Conditioning c2 = net.condition(760, 1);
    Tensor delta = ops::sub(reuse_forward(b, x2, c2, false, memory), x2);
    // delta[j, d] / M[j, d] is the per-channel gate, identical for every token.
    const std::size_t tokens = memory.dim(0), dim = memory.dim(1);
    for (std::size_t d = 0; d < dim; ++d) {
      const double gate = delta[d] / memory[d];
      for (std::size_t j = 1; j < tokens; ++j) {
        CHECK(delta[j * dim + d] == doctest::Approx(gate * memory[j * dim + d]).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("interval one reproduces plain sampling bit-exactly") {
  const NoiseSchedule s = default_schedule();
  for (Arch arch : {Arch::toy_unet, Arch::toy_dit}) {
    ScoreNetwork net = small_net(arch);
    for (int N : {10, 50}) {
      for (std::uint64_t seed : {0u, 7u}) {
        SamplerConfig cfg;
        cfg.steps = N;
        cfg.seed = seed;
        cfg.guidance_weight = 1.5;
        Trajectory base = sample(net, s, cfg);
        Trajectory fr = frdiff_sample(net, s, cfg, KeyframeSet::all(N), MixingSchedule{});
        CHECK(bit_equal(base.final_sample, fr.final_sample));
        CHECK(base.total_ops == fr.total_ops);
      }
    }
  }
}

TEST_CASE("zero mixing weight reduces to fewer solver steps") {
  const NoiseSchedule s = default_schedule();
  ScoreNetwork net = small_net(Arch::toy_unet, 3);
  for (int m : {2, 5}) {
    SamplerConfig cfg;
    cfg.steps = 20;
    cfg.class_label = kUnconditional;
    const KeyframeSet k = KeyframeSet::uniform(20, m);
    Trajectory fr = frdiff_sample(net, s, cfg, k, never_fresh());
    const auto full = sampling_times(1000, 20);
    std::vector<int> coarse;
    for (int n : k.members()) coarse.push_back(full[n - 1]);
    Trajectory reduced = sample(net, s, cfg, nullptr, coarse);
    CHECK(max_abs_diff(fr.final_sample, reduced.final_sample) < 1e-10);
    for (const StepRecord& r : fr.steps) CHECK(r.network_evals == (r.keyframe ? 1 : 0));
  }
}

TEST_CASE("cost ledger for fifty steps at interval two") {
  const NoiseSchedule s = default_schedule();
  ScoreNetwork net = small_net(Arch::toy_unet);
  SamplerConfig cfg;
  cfg.steps = 50;
  cfg.class_label = kUnconditional;
  Trajectory t = frdiff_sample(net, s, cfg, KeyframeSet::uniform(50, 2), MixingSchedule{});
  const std::uint64_t L = net.layer_count();
  int full_s = 0;
  for (const StepRecord& r : t.steps) {
    full_s += r.s_ops_executed == L;
    CHECK(r.keyframe == (r.iteration % 2 == 1));
    if (!r.keyframe && r.lambda == 0.0) CHECK(r.network_evals == 0);
    if (!r.keyframe && r.iteration <= 10) CHECK(r.network_evals == 0);
    if (!r.keyframe && r.lambda > 0.0) CHECK(r.network_evals == 1);
    CHECK(r.s_ops_executed + r.s_ops_skipped == L);
  }
  CHECK(full_s == 25);

  const auto path = std::filesystem::temp_directory_path() / "frdiff_ledger.csv";
  write_cost_ledger(path, t);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "iteration,is_keyframe,lambda,network_evals,s_ops_executed,s_ops_skipped,wallclock_ms");
  int rows = 0;
  for (std::string line; std::getline(in, line);) rows += !line.empty();
  CHECK(rows == 50);
  std::filesystem::remove(path);
}

TEST_CASE("ledger counts scale with guidance branches") {
  const NoiseSchedule s = default_schedule();
  ScoreNetwork net = small_net(Arch::toy_dit);
  SamplerConfig cfg;
  cfg.steps = 12;
  cfg.class_label = 1;
  cfg.guidance_weight = 2.0;
  const std::uint64_t L = net.layer_count();
  Trajectory t = frdiff_sample(net, s, cfg, KeyframeSet::uniform(12, 3), MixingSchedule{});
  for (const StepRecord& r : t.steps) {
    CHECK(r.s_ops_executed + r.s_ops_skipped == 2 * L);
    CHECK(r.s_ops_executed == (r.keyframe ? 2 * L : 0));
    CHECK(r.network_evals == (r.keyframe || r.lambda > 0 ? 2 : 0));
  }
}

TEST_CASE("cache holds the latest keyframe's features") {
  const NoiseSchedule s = default_schedule();
  ScoreNetwork net = small_net(Arch::toy_unet);
  SamplerConfig cfg;
  cfg.steps = 7;
  cfg.class_label = kUnconditional;
  FeatureReuseHook hook(cfg, KeyframeSet(7, {1, 4, 6}), MixingSchedule{});
  Trajectory t = sample(net, s, cfg, &hook);
  const ReuseCache* cache = hook.cache();
  REQUIRE(cache != nullptr);
  CHECK(cache->last_keyframe == 6);

  // Recompute the prefix inputs at iteration 6 by a plain forward on that state.
  struct Capture : BlockExecutor {
    std::vector<Tensor> prefixes;
    Tensor run(std::size_t, const ResidualBlock& b, const Tensor& x, const Conditioning& c) override {
      prefixes.push_back(b.prefix(x, c));
      return b.forward(x, c);
    }
  } capture;
  net.forward(t.states[5], t.steps[5].time, kUnconditional, &capture);
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    CHECK(bit_equal(cache->branches[0].memory[i], capture.prefixes[i]));
  }
}

TEST_CASE("reuse scope limits which blocks are cached") {
  const NoiseSchedule s = default_schedule();
  ScoreNetwork net = small_net(Arch::toy_unet);
  SamplerConfig cfg;
  cfg.steps = 10;
  cfg.class_label = kUnconditional;
  MixingSchedule off;
  off.enabled = false;
  ReuseScope only_resnet{BlockKind::resnet};
  Trajectory t = frdiff_sample(net, s, cfg, KeyframeSet::uniform(10, 2), off, only_resnet);
  for (const StepRecord& r : t.steps) {
    if (!r.keyframe) {
      CHECK(r.s_ops_skipped == 1);
      CHECK(r.s_ops_executed == 1);
    }
  }
  CHECK(ReuseScope::parse({"all"}).names().size() == 4);
  CHECK(ReuseScope::parse({"resnet", "spatial_transformer"}).contains(BlockKind::resnet));
  CHECK(!ReuseScope::parse({"resnet"}).contains(BlockKind::dit_attention));
  CHECK_THROWS_AS(ReuseScope::parse({"conv"}), ConfigError);
}

TEST_CASE("mismatched keyframe horizon is rejected") {
  SamplerConfig cfg;
  cfg.steps = 10;
  ScoreNetwork net = small_net(Arch::toy_unet);
  CHECK_THROWS_AS(frdiff_sample(net, default_schedule(), cfg, KeyframeSet::uniform(12, 2), {}),
                  ConfigError);
}
