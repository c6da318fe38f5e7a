// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>

namespace frdiff {

// Calls fn(i) for i in [0, n) on up to `threads` workers (0 = hardware
// concurrency). Indices are statically partitioned, so results written to
// per-index slots do not depend on scheduling. The first exception is rethrown.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace frdiff
