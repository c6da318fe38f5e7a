// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "frdiff/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "frdiff/errors.hpp"

namespace frdiff {

namespace fs = std::filesystem;

namespace {

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

unsigned char to_pixel(double x) {
  const double v = std::clamp((x + 1.0) / 2.0, 0.0, 1.0);
  return static_cast<unsigned char>(std::lround(v * 255.0));
}

}  // namespace

void write_tensor(const fs::path& dir, const std::string& name, const Tensor& t) {
  auto bin = open_out(dir / (name + ".bin"));
  for (double v : t.values()) {
    const float f = static_cast<float>(v);
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof bits);
    bits = to_little_endian(bits);
    bin.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  if (!bin) throw IoError("failed writing " + (dir / (name + ".bin")).string());

  nlohmann::ordered_json manifest;
  manifest["name"] = name;
  manifest["dtype"] = "float32";
  manifest["shape"] = t.shape();
  auto meta = open_out(dir / (name + ".json"));
  meta << manifest.dump(2) << '\n';
}

Tensor read_tensor(const fs::path& dir, const std::string& name) {
  std::ifstream meta(dir / (name + ".json"));
  if (!meta) throw IoError("missing tensor manifest " + (dir / (name + ".json")).string());
  nlohmann::json manifest;
  try {
    meta >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad tensor manifest for " + name + ": " + e.what());
  }
  if (manifest.value("dtype", "") != "float32") {
    throw IoError("unsupported dtype in manifest for " + name);
  }
  Shape shape = manifest.at("shape").get<Shape>();
  const std::size_t n = shape_numel(shape);

  std::ifstream bin(dir / (name + ".bin"), std::ios::binary);
  if (!bin) throw IoError("missing tensor data " + (dir / (name + ".bin")).string());
  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits;
    if (!bin.read(reinterpret_cast<char*>(&bits), sizeof bits)) {
      throw IoError("truncated tensor data for " + name);
    }
    bits = to_little_endian(bits);
    float f;
    std::memcpy(&f, &bits, sizeof f);
    values[i] = f;
  }
  return Tensor(std::move(shape), std::move(values));
}

void write_pgm(const fs::path& path, const Tensor& image) {
  const auto& s = image.shape();
  const bool ok = (s.size() == 3 && s[0] == 1) || s.size() == 2;
  if (!ok) throw DimensionError("write_pgm expects [1 x h x w] or [h x w], got " + shape_string(s));
  const std::size_t h = s[s.size() - 2], w = s[s.size() - 1];
  auto out = open_out(path);
  out << "P5\n" << w << ' ' << h << "\n255\n";
  for (double v : image.values()) out.put(static_cast<char>(to_pixel(v)));
}

void write_ppm(const fs::path& path, const Tensor& image) {
  const auto& s = image.shape();
  if (s.size() != 3 || s[0] != 3) {
    throw DimensionError("write_ppm expects [3 x h x w], got " + shape_string(s));
  }
  const std::size_t h = s[1], w = s[2];
  auto out = open_out(path);
  out << "P6\n" << w << ' ' << h << "\n255\n";
  for (std::size_t p = 0; p < h * w; ++p) {
    for (std::size_t c = 0; c < 3; ++c) out.put(static_cast<char>(to_pixel(image[c * h * w + p])));
  }
}

void write_heatmap_pgm(const fs::path& path, const Tensor& feature) {
  std::size_t h = 0, w = 0;
  std::vector<double> map;
  if (feature.rank() == 3) {
    const std::size_t c = feature.dim(0);
    h = feature.dim(1);
    w = feature.dim(2);
    map.assign(h * w, 0.0);
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t p = 0; p < h * w; ++p) map[p] += std::abs(feature[ch * h * w + p]) / c;
    }
  } else if (feature.rank() == 2) {
    h = feature.dim(0);
    w = feature.dim(1);
    map = feature.to_vector();
  } else {
    throw DimensionError("heatmap expects rank 2 or 3, got " + shape_string(feature.shape()));
  }
  const auto [lo, hi] = std::minmax_element(map.begin(), map.end());
  const double span = *hi - *lo;
  auto out = open_out(path);
  out << "P5\n" << w << ' ' << h << "\n255\n";
  for (double v : map) {
    const double u = span > 0.0 ? (v - *lo) / span : 0.0;
    out.put(static_cast<char>(static_cast<unsigned char>(std::lround(u * 255.0))));
  }
}

}  // namespace frdiff
