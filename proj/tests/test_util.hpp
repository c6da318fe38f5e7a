// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "frdiff/ops.hpp"
#include "frdiff/rng.hpp"

namespace frdiff::testing {

inline Tensor random_tensor(const Shape& shape, std::uint64_t seed, double stddev = 1.0) {
  Rng rng(seed);
  return normal_tensor(shape, rng, stddev);
}

// sum(t * w) with fixed pseudo-random weights, so every output element
// contributes a distinct gradient.
inline Tensor weighted_sum(const Tensor& t, std::uint64_t seed = 99) {
  return ops::sum(ops::mul(t, random_tensor(t.shape(), seed)));
}

}  // namespace frdiff::testing
