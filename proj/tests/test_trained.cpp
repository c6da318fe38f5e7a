// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

// Properties of the trained toy model; FRDIFF_TEST_CHECKPOINT names the
// checkpoint directory written by the training fixture.

#include <doctest.h>

#include <algorithm>
#include <cstdlib>

#include "frdiff/analysis.hpp"
#include "frdiff/network.hpp"
#include "frdiff/tape.hpp"
#include "test_util.hpp"

using namespace frdiff;

namespace {

const ScoreNetwork& trained() {
  static const ScoreNetwork net = [] {
    const char* dir = std::getenv("FRDIFF_TEST_CHECKPOINT");
    REQUIRE_MESSAGE(dir != nullptr, "FRDIFF_TEST_CHECKPOINT is not set");
    return load_checkpoint(dir);
  }();
  return net;
}

NoiseSchedule default_schedule() { return NoiseSchedule::linear(1000, 1e-4, 0.02); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("score at pure noise has unit variance") {
  const ScoreNetwork& net = trained();
  NoGradScope no_grad;
  double sum = 0.0, sq = 0.0;
  std::size_t count = 0;
  for (std::uint64_t k = 0; k < 1000; ++k) {
    const int label = static_cast<int>(k % 3) - 1;
    Tensor eps = net.forward(noise_tensor(net.sample_shape(), 5000 + k), 1000, label);
    for (double v : eps.values()) {
      sum += v;
      sq += v * v;
      ++count;
    }
  }
  const double mean = sum / count;
  const double var = sq / count - mean * mean;
  INFO("variance " << var);
  CHECK(std::abs(var - 1.0) < 0.3);
}

TEST_CASE("block outputs change least in the middle of the trajectory") {
  const ScoreNetwork& net = trained();
  SamplerConfig cfg;
  cfg.steps = 50;
  std::vector<FeatureTrace> traces;
  for (std::uint64_t s = 0; s < 8; ++s) {
    cfg.seed = s;
    traces.push_back(record_features(net, default_schedule(), cfg));
  }
  SimilarityReport r = temporal_change(traces, 1);
  std::vector<double> curve;
  for (std::size_t n = 0; n < r.mean[0].size(); ++n) {
    std::vector<double> across;
    for (const auto& layer : r.mean) across.push_back(layer[n]);
    curve.push_back(median(across));
  }
  const double mid = curve[curve.size() / 2];
  const double peak = *std::max_element(curve.begin(), curve.end());
  INFO("mid " << mid << " peak " << peak);
  CHECK(mid < peak);
}

TEST_CASE("reduced-step equivalence on trained weights") {
  const ScoreNetwork& net = trained();
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    SamplerConfig cfg;
    cfg.steps = 50;
    cfg.seed = seed;
    CHECK(verify_nfe_equivalence(net, default_schedule(), cfg, 2).max_abs_dev < 1e-10);
    CHECK(verify_nfe_equivalence(net, default_schedule(), cfg, 5).max_abs_dev < 1e-9);
  }
}
