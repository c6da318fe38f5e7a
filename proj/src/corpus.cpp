// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "frdiff/corpus.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "frdiff/errors.hpp"
#include "frdiff/rng.hpp"

namespace frdiff {

std::string_view corpus_name(CorpusKind kind) { return kind == CorpusKind::shapes ? "shapes" : "gmm"; }

CorpusKind parse_corpus(std::string_view name) {
  if (name == "shapes") return CorpusKind::shapes;
  if (name == "gmm") return CorpusKind::gmm;
  throw ConfigError("unknown corpus '" + std::string(name) + "'");
}

namespace {

constexpr int kSide = 8;

int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

Tensor draw_shape(int kind, Rng& rng) {
  std::vector<double> px(kSide * kSide, -1.0);
  auto set = [&px](int y, int x) {
    if (y >= 0 && y < kSide && x >= 0 && x < kSide) px[y * kSide + x] = 1.0;
  };
  switch (kind) {
    case 0: {  // bar
      const bool vertical = uniform_int(rng, 0, 1) == 1;
      const int pos = uniform_int(rng, 1, kSide - 3);
      const int thick = uniform_int(rng, 1, 2);
      const int lo = uniform_int(rng, 0, 2), hi = uniform_int(rng, kSide - 3, kSide - 1);
      for (int a = lo; a <= hi; ++a) {
        for (int d = 0; d < thick; ++d) vertical ? set(a, pos + d) : set(pos + d, a);
      }
      break;
    }
    case 1: {  // cross
      const int cy = uniform_int(rng, 2, kSide - 3), cx = uniform_int(rng, 2, kSide - 3);
      const int arm = uniform_int(rng, 1, 2);
      for (int d = -arm; d <= arm; ++d) {
        set(cy + d, cx);
        set(cy, cx + d);
      }
      break;
    }
    default: {  // disk
      std::uniform_real_distribution<double> centre(2.5, kSide - 3.5), radius(1.2, 2.6);
      const double cy = centre(rng), cx = centre(rng), r = radius(rng);
      for (int y = 0; y < kSide; ++y) {
        for (int x = 0; x < kSide; ++x) {
          if (std::hypot(y - cy, x - cx) <= r) set(y, x);
        }
      }
      break;
    }
  }
  return Tensor({1, kSide, kSide}, std::move(px));
}

}  // namespace

Dataset make_shapes(std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d;
  for (std::size_t i = 0; i < count; ++i) {
    const int kind = uniform_int(rng, 0, 2);
    d.images.push_back(draw_shape(kind, rng));
    d.labels.push_back(kind == 0 ? 0 : 1);
  }
  return d;
}

Dataset make_gmm(std::size_t count, std::uint64_t seed) {
  constexpr int kModes = 8;
  Rng rng(seed);
  std::normal_distribution<double> jitter(0.0, 0.05);
  Dataset d;
  for (std::size_t i = 0; i < count; ++i) {
    const int mode = uniform_int(rng, 0, kModes - 1);
    const double angle = 2.0 * std::numbers::pi * mode / kModes;
    const double x = 0.7 * std::cos(angle) + jitter(rng);
    const double y = 0.7 * std::sin(angle) + jitter(rng);
    d.images.push_back(Tensor({1, 1, 2}, {x, y}));
    d.labels.push_back(mode % 2);
  }
  return d;
}

Dataset make_corpus(CorpusKind kind, std::size_t count, std::uint64_t seed) {
  if (count == 0) throw ConfigError("corpus size must be positive");
  return kind == CorpusKind::shapes ? make_shapes(count, seed) : make_gmm(count, seed);
}

}  // namespace frdiff
