// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "frdiff/tensor.hpp"

namespace frdiff {

enum class CorpusKind { shapes, gmm };

std::string_view corpus_name(CorpusKind kind);
CorpusKind parse_corpus(std::string_view name);

struct Dataset {
  std::vector<Tensor> images;
  std::vector<int> labels;
  std::size_t num_classes = 2;

  std::size_t size() const { return images.size(); }
  Shape sample_shape() const { return images.empty() ? Shape{} : images.front().shape(); }
};

// 8x8 single-channel shapes in [-1, 1]: label 0 is a horizontal or vertical
// bar, label 1 is a cross or a disk. Position and size vary with the seed.
Dataset make_shapes(std::size_t count, std::uint64_t seed);

// Points of an 8-mode Gaussian mixture on a circle of radius 0.7, stored as
// [1 x 1 x 2] images. The label is the mode index mod 2.
Dataset make_gmm(std::size_t count, std::uint64_t seed);

Dataset make_corpus(CorpusKind kind, std::size_t count, std::uint64_t seed);

}  // namespace frdiff
