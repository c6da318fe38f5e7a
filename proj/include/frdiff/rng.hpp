// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>

#include "frdiff/tensor.hpp"

namespace frdiff {

using Rng = std::mt19937_64;

Tensor normal_tensor(const Shape& shape, Rng& rng, double stddev = 1.0);
// Standard normal noise fully determined by `seed`.
Tensor noise_tensor(const Shape& shape, std::uint64_t seed);

}  // namespace frdiff
