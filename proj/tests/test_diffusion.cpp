// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "frdiff/corpus.hpp"
#include "frdiff/errors.hpp"
#include "frdiff/op_counter.hpp"
#include "frdiff/ops.hpp"
#include "frdiff/sampler.hpp"
#include "frdiff/tensor_io.hpp"
#include "frdiff/train.hpp"
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

NoiseSchedule random_schedule(std::uint64_t seed, int horizon) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(1e-4, 0.05);
  std::vector<double> b(horizon);
  for (double& v : b) v = u(rng);
  std::sort(b.begin(), b.end());
  return NoiseSchedule::from_betas(b);
}

}  // namespace

TEST_CASE("noise schedule bounds and monotonicity") {
  for (const NoiseSchedule& s : {default_schedule(), random_schedule(3, 200)}) {
    CHECK(s.alpha_bar(0) == 1.0);
    for (int t = 1; t <= s.horizon(); ++t) {
      CHECK(s.beta(t) > 0.0);
      CHECK(s.beta(t) < 1.0);
      CHECK(s.alpha_bar(t) < s.alpha_bar(t - 1));
      if (t > 1) CHECK(s.beta(t) >= s.beta(t - 1));
    }
  }
  CHECK(default_schedule().beta(1) == doctest::Approx(1e-4));
  CHECK(default_schedule().beta(1000) == doctest::Approx(0.02));
  CHECK_THROWS_AS(NoiseSchedule::from_betas({0.1, 1.0}), ConfigError);
  CHECK_THROWS_AS(NoiseSchedule::from_betas({0.0}), ConfigError);
}

TEST_CASE("sampling times are strided, noisiest first") {
  auto t = sampling_times(1000, 50);
  CHECK(t.size() == 50);
  CHECK(t.front() == 1000);
  CHECK(t.back() == 20);
  CHECK(std::is_sorted(t.rbegin(), t.rend()));
  auto t10 = sampling_times(1000, 10);
  for (int k = 0; k < 10; ++k) CHECK(t10[k] == t[5 * k]);
  CHECK_THROWS_AS(sampling_times(1000, 0), ConfigError);
}

TEST_CASE("ddim step identities") {
  const NoiseSchedule s = default_schedule();
  Tensor x = random_tensor({1, 4, 4}, 1), eps = random_tensor({1, 4, 4}, 2);
  CHECK(max_abs_diff(ddim_update(x, eps, 0.3, 0.3), x) < 1e-15);
  Tensor z = ddim_step(x, Tensor({1, 4, 4}), 500, 300, s);
  CHECK(max_abs_diff(z, ops::scale(x, std::sqrt(s.alpha_bar(300) / s.alpha_bar(500)))) < 1e-15);
  CHECK_THROWS_AS(ddim_step(x, eps, 300, 300, s), ContractError);
  CHECK_THROWS_AS(ddim_step(x, eps, 300, 400, s), ContractError);
  CHECK_THROWS_AS(ddim_step(x, eps, 5, -1, s), ContractError);
}

TEST_CASE("two ddim steps with the same score equal one direct step") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const NoiseSchedule s = random_schedule(seed, 100);
    Tensor x = random_tensor({1, 4, 4}, seed + 1), eps = random_tensor({1, 4, 4}, seed + 2);
    Rng rng(seed);
    const int t = std::uniform_int_distribution<int>(3, 100)(rng);
    const int mid = t - 1, end = t - 2;
    Tensor two = ddim_step(ddim_step(x, eps, t, mid, s), eps, mid, end, s);
    CHECK(max_abs_diff(two, ddim_step(x, eps, t, end, s)) < 1e-10);
    Tensor chain = x;
    for (int k = 0; k < 5 && t - k - 1 >= 0; ++k) chain = ddim_step(chain, eps, t - k, t - k - 1, s);
    CHECK(max_abs_diff(chain, ddim_step(x, eps, t, t - 5, s)) < 1e-10);
  }
}

TEST_CASE("classifier-free guidance combination") {
  Tensor c = random_tensor({5}, 1), u = random_tensor({5}, 2);
  CHECK(bit_equal(cfg_combine(c, u, 0.0), c));
  CHECK(bit_equal(cfg_combine(c, c, 3.7), c));
  CHECK(cfg_combine(Tensor::scalar(2.0), Tensor::scalar(1.0), 1.0).item() == 3.0);
  Tensor ref = ops::sub(ops::scale(c, 1.5), ops::scale(u, 0.5));
  CHECK(max_abs_diff(cfg_combine(c, u, 0.5), ref) < 1e-14);
}

TEST_CASE("split identity holds exactly for every block kind") {
  for (Arch arch : {Arch::toy_unet, Arch::toy_dit}) {
    ScoreNetwork net = small_net(arch);
    for (std::size_t i = 0; i < net.layer_count(); ++i) {
      const ResidualBlock& b = net.block(i);
      for (std::uint64_t k = 0; k < 20; ++k) {
        Conditioning cond = net.condition(1.0 + 49.0 * k, static_cast<int>(k % 3) - 1);
        Tensor h = net.embed(random_tensor(net.sample_shape(), 100 * i + k));
        Tensor split = ops::add(b.suffix(b.prefix(h, cond), cond), h);
        CHECK(bit_equal(split, b.forward(h, cond)));
      }
    }
  }
}

TEST_CASE("prefix does not depend on time") {
  for (Arch arch : {Arch::toy_unet}) {
    ScoreNetwork net = small_net(arch);
    Tensor h = net.embed(random_tensor(net.sample_shape(), 4));
    for (std::size_t i = 0; i < net.layer_count(); ++i) {
      CHECK(bit_equal(net.block(i).prefix(h, net.condition(10, 0)),
                      net.block(i).prefix(h, net.condition(900, 0))));
    }
  }
}

TEST_CASE("a DiT block with zero gate is the identity") {
  Rng rng(5);
  for (BlockKind kind : {BlockKind::dit_attention, BlockKind::dit_feedforward}) {
    DiTBlock b(kind, 8, 16, rng);
    b.zero_gate();
    Conditioning cond{random_tensor({16}, 6), Tensor()};
    Tensor x = random_tensor({4, 8}, 7);
    CHECK(bit_equal(b.forward(x, cond), ops::add(ops::mul_row_vector(b.prefix(x, cond), Tensor({8})), x)));
    CHECK(max_abs_diff(b.forward(x, cond), x) == 0.0);
  }
}

TEST_CASE("toy network shapes") {
  ScoreNetwork unet = build_toy_network(Arch::toy_unet, 32, 4, 0);
  CHECK(unet.layer_count() == 4);
  CHECK(unet.block(0).kind() == BlockKind::resnet);
  CHECK(unet.block(1).kind() == BlockKind::spatial_transformer);
  Tensor x = random_tensor({1, 8, 8}, 1);
  CHECK(unet.forward(x, 500, 0).shape() == Shape{1, 8, 8});
  ScoreNetwork dit = build_toy_network(Arch::toy_dit, 32, 2, 0);
  CHECK(dit.layer_count() == 4);
  CHECK(dit.block(0).kind() == BlockKind::dit_attention);
  CHECK(dit.block(1).kind() == BlockKind::dit_feedforward);
  CHECK(dit.forward(x, 500, kUnconditional).shape() == Shape{1, 8, 8});
  CHECK_THROWS_AS(parse_arch("toy_vit"), ConfigError);
  CHECK_THROWS_AS(unet.forward(random_tensor({1, 4, 4}, 1), 500, 0), DimensionError);
  CHECK_THROWS_AS(unet.forward(x, 500, 2), ConfigError);
}

TEST_CASE("checkpoint round trip is float32 exact") {
  const auto dir = std::filesystem::temp_directory_path() / "frdiff_test_ckpt";
  std::filesystem::remove_all(dir);
  ScoreNetwork net = small_net(Arch::toy_dit, 9);
  save_checkpoint(net, dir);
  ScoreNetwork back = load_checkpoint(dir);
  auto a = net.parameters(), b = back.parameters();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].first == b[i].first);
    for (std::size_t k = 0; k < a[i].second->numel(); ++k) {
      CHECK((*b[i].second)[k] == static_cast<double>(static_cast<float>((*a[i].second)[k])));
    }
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "missing"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("tensor dump and image formats") {
  const auto dir = std::filesystem::temp_directory_path() / "frdiff_test_io";
  std::filesystem::remove_all(dir);
  Tensor t({2, 3}, {0.5, -1.25, 3.0, 0.0, 1e-3, -7.0});
  write_tensor(dir, "t", t);
  CHECK(std::filesystem::file_size(dir / "t.bin") == 24);
  Tensor back = read_tensor(dir, "t");
  CHECK(back.shape() == t.shape());
  CHECK(back[1] == -1.25);
  CHECK(back[4] == static_cast<double>(1e-3f));

  write_pgm(dir / "img.pgm", Tensor({1, 1, 3}, {-1.0, 0.0, 2.0}));
  std::ifstream in(dir / "img.pgm", std::ios::binary);
  std::string all((std::istreambuf_iterator<char>(in)), {});
  CHECK(all == std::string("P5\n3 1\n255\n") + std::string{char(0), char(128), char(255)});
  CHECK_THROWS_AS(write_pgm(dir / "bad.pgm", Tensor({2, 2, 2})), DimensionError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("toy corpora are deterministic and labelled") {
  Dataset a = make_shapes(64, 3), b = make_shapes(64, 3);
  REQUIRE(a.size() == 64);
  CHECK(a.sample_shape() == Shape{1, 8, 8});
  bool saw0 = false, saw1 = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(bit_equal(a.images[i], b.images[i]));
    CHECK(a.labels[i] == b.labels[i]);
    saw0 |= a.labels[i] == 0;
    saw1 |= a.labels[i] == 1;
    for (double v : a.images[i].values()) CHECK((v == 1.0 || v == -1.0));
  }
  CHECK((saw0 && saw1));
  Dataset g = make_gmm(32, 1);
  CHECK(g.sample_shape() == Shape{1, 1, 2});
  CHECK_THROWS_AS(parse_corpus("mnist"), ConfigError);
}

TEST_CASE("zero-step training leaves the weights unchanged") {
  ScoreNetwork net = small_net(Arch::toy_unet);
  ScoreNetwork copy = net;
  TrainConfig tc;
  tc.steps = 0;
  CHECK(train_toy(net, make_shapes(8, 0), default_schedule(), tc).losses.empty());
  auto a = net.parameters(), b = copy.parameters();
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(bit_equal(*a[i].second, *b[i].second));
}

TEST_CASE("training reduces the held-out loss on the toy corpus") {
  const NoiseSchedule s = default_schedule();
  const Dataset data = make_gmm(256, 0);
  ModelConfig mc;
  mc.height = 1;
  mc.image_width = 2;
  std::vector<double> early, late;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    mc.seed = seed;
    TrainConfig tc;
    tc.seed = seed;
    tc.steps = 100;
    ScoreNetwork a(mc);
    train_toy(a, data, s, tc);
    tc.steps = 2000;
    ScoreNetwork b(mc);
    train_toy(b, data, s, tc);
    early.push_back(evaluate_loss(a, data, s, 512, 77));
    late.push_back(evaluate_loss(b, data, s, 512, 77));
  }
  std::sort(early.begin(), early.end());
  std::sort(late.begin(), late.end());
  INFO("median loss after 100 steps " << early[1] << ", after 2000 steps " << late[1]);
  CHECK(late[1] < early[1]);
}

TEST_CASE("non-finite training loss aborts with a report") {
  ScoreNetwork net = small_net(Arch::toy_unet);
  TrainConfig tc;
  tc.steps = 5;
  Dataset data = make_shapes(4, 0);
  for (Tensor& img : data.images) {
    auto v = img.to_vector();
    v[3] = std::nan("");
    img = Tensor(img.shape(), std::move(v));
  }
  CHECK_THROWS_AS(train_toy(net, data, default_schedule(), tc), NumericalError);
}

TEST_CASE("sampler determinism and single-step cost") {
  const NoiseSchedule s = default_schedule();
  ScoreNetwork net = small_net(Arch::toy_unet);
  SamplerConfig cfg;
  cfg.steps = 10;
  cfg.seed = 4;
  Trajectory a = sample(net, s, cfg), b = sample(net, s, cfg);
  CHECK(bit_equal(a.final_sample, b.final_sample));
  CHECK(a.states.size() == 11);

  cfg.steps = 1;
  cfg.class_label = kUnconditional;
  Trajectory one = sample(net, s, cfg);
  CHECK(one.steps.size() == 1);
  CHECK(one.steps[0].network_evals == 1);
  OpCountScope full;
  net.forward(initial_noise(net, cfg.seed), 1000, kUnconditional);
  CHECK(one.total_ops == full.elapsed());
}

TEST_CASE("guidance branches") {
  SamplerConfig c;
  c.class_label = 1;
  c.guidance_weight = 2.0;
  CHECK(branch_labels(c) == std::vector<int>{1, kUnconditional});
  c.guidance_weight = 0.0;
  CHECK(branch_labels(c) == std::vector<int>{1});
  c.class_label = kUnconditional;
  c.guidance_weight = 2.0;
  CHECK(branch_labels(c) == std::vector<int>{kUnconditional});
  c.guidance_weight = -1.0;
  CHECK_THROWS_AS(branch_labels(c), ConfigError);
}

TEST_CASE("ddpm solver runs and is seeded") {
  const NoiseSchedule s = default_schedule();
  ScoreNetwork net = small_net(Arch::toy_dit);
  SamplerConfig cfg;
  cfg.steps = 5;
  cfg.solver = Solver::ddpm;
  Tensor a = sample(net, s, cfg).final_sample, b = sample(net, s, cfg).final_sample;
  CHECK(bit_equal(a, b));
  cfg.solver = Solver::ddim;
  CHECK(!bit_equal(a, sample(net, s, cfg).final_sample));
}
