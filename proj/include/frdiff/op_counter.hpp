// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

namespace frdiff {

// Per-thread tally of forward arithmetic: multiply-accumulates for matmul and
// convolution, one unit per output element for everything else. Backward
// passes are not counted.
std::uint64_t op_count();
void add_ops(std::uint64_t n);

class OpCountScope {
 public:
  OpCountScope() : start_(op_count()) {}
  std::uint64_t elapsed() const { return op_count() - start_; }

 private:
  std::uint64_t start_;
};

}  // namespace frdiff
