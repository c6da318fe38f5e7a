// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "frdiff/tensor.hpp"

namespace frdiff {

// Tensor dump: `<dir>/<name>.bin` holds little-endian float32 values in
// row-major order; `<dir>/<name>.json` is the manifest
// {"name": ..., "dtype": "float32", "shape": [...]}. Values are rounded to
// float32 on write.
void write_tensor(const std::filesystem::path& dir, const std::string& name, const Tensor& t);
Tensor read_tensor(const std::filesystem::path& dir, const std::string& name);

// Binary PGM (P5) of a [1 x h x w] or [h x w] image in model space [-1, 1]:
// pixel = round(clamp((x + 1) / 2, 0, 1) * 255).
void write_pgm(const std::filesystem::path& path, const Tensor& image);
// Binary PPM (P6) of a [3 x h x w] image, same pixel mapping.
void write_ppm(const std::filesystem::path& path, const Tensor& image);
// Min-max normalised heatmap of a feature map: [c x h x w] is averaged over
// channels by absolute value, [rows x cols] is written as is.
void write_heatmap_pgm(const std::filesystem::path& path, const Tensor& feature);

}  // namespace frdiff
