// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "frdiff/nn.hpp"

#include <cmath>

#include "frdiff/ops.hpp"

namespace frdiff {

Tensor normal_tensor(const Shape& shape, Rng& rng, double stddev) {
  std::normal_distribution<double> dist(0.0, stddev);
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = dist(rng);
  return Tensor(shape, std::move(v));
}

Tensor noise_tensor(const Shape& shape, std::uint64_t seed) {
  Rng rng(seed);
  return normal_tensor(shape, rng);
}

}  // namespace frdiff

namespace frdiff::nn {

Linear Linear::init(std::size_t in, std::size_t out, Rng& rng, double gain) {
  return {normal_tensor({in, out}, rng, gain / std::sqrt(static_cast<double>(in))),
          Tensor({out})};
}

Linear Linear::zeros(std::size_t in, std::size_t out) { return {Tensor({in, out}), Tensor({out})}; }

Tensor Linear::operator()(const Tensor& x) const {
  if (x.rank() == 1) {
    Tensor row = ops::reshape(x, {1, x.numel()});
    Tensor y = ops::add_row_vector(ops::matmul(row, weight), bias);
    return ops::reshape(y, {y.numel()});
  }
  return ops::add_row_vector(ops::matmul(x, weight), bias);
}

void Linear::visit(const std::string& prefix, const ParamVisitor& fn) {
  fn(prefix + ".weight", weight);
  fn(prefix + ".bias", bias);
}

Conv Conv::init(std::size_t in, std::size_t out, std::size_t k, Rng& rng, double gain) {
  const double fan_in = static_cast<double>(in * k * k);
  return {normal_tensor({out, in, k, k}, rng, gain / std::sqrt(fan_in)), Tensor({out})};
}

Tensor Conv::operator()(const Tensor& x) const { return ops::conv2d(x, weight, bias); }

void Conv::visit(const std::string& prefix, const ParamVisitor& fn) {
  fn(prefix + ".weight", weight);
  fn(prefix + ".bias", bias);
}

Affine Affine::identity(std::size_t n) { return {Tensor::full({n}, 1.0), Tensor({n})}; }

void Affine::visit(const std::string& prefix, const ParamVisitor& fn) {
  fn(prefix + ".gamma", gamma);
  fn(prefix + ".beta", beta);
}

Attention Attention::init(std::size_t dim, std::size_t context_dim, Rng& rng) {
  return {Linear::init(dim, dim, rng), Linear::init(context_dim, dim, rng),
          Linear::init(context_dim, dim, rng), Linear::init(dim, dim, rng)};
}

void Attention::visit(const std::string& prefix, const ParamVisitor& fn) {
  query.visit(prefix + ".query", fn);
  key.visit(prefix + ".key", fn);
  value.visit(prefix + ".value", fn);
  out.visit(prefix + ".out", fn);
}

Mlp Mlp::init(std::size_t dim, std::size_t hidden, Rng& rng) {
  return {Linear::init(dim, hidden, rng), Linear::init(hidden, dim, rng)};
}

void Mlp::visit(const std::string& prefix, const ParamVisitor& fn) {
  fc1.visit(prefix + ".fc1", fn);
  fc2.visit(prefix + ".fc2", fn);
}

Tensor self_attention(const Tensor& x, const Attention& attn) {
  return cross_attention(x, x, attn);
}

Tensor cross_attention(const Tensor& x, const Tensor& context, const Attention& attn) {
  return attn.out(ops::attention(attn.query(x), attn.key(context), attn.value(context)));
}

Tensor mlp(const Tensor& x, const Mlp& m) { return m.fc2(ops::gelu(m.fc1(x))); }

}  // namespace frdiff::nn
