// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <string>

#include "frdiff/rng.hpp"
#include "frdiff/tensor.hpp"

// Parameterised layers built from frdiff::ops. Attention is single-head with
// no masking or dropout.
namespace frdiff::nn {

using ParamVisitor = std::function<void(const std::string& name, Tensor& param)>;

struct Linear {
  Tensor weight;  // [in x out]
  Tensor bias;    // [out]

  static Linear init(std::size_t in, std::size_t out, Rng& rng, double gain = 1.0);
  static Linear zeros(std::size_t in, std::size_t out);
  // x is [n x in] or a vector of length in (returned as a vector).
  Tensor operator()(const Tensor& x) const;
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

struct Conv {
  Tensor weight;  // [out x in x k x k]
  Tensor bias;    // [out]

  static Conv init(std::size_t in, std::size_t out, std::size_t k, Rng& rng, double gain = 1.0);
  Tensor operator()(const Tensor& x) const;
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

struct Affine {
  Tensor gamma;
  Tensor beta;

  static Affine identity(std::size_t n);
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

struct Attention {
  Linear query;
  Linear key;
  Linear value;
  Linear out;

  static Attention init(std::size_t dim, std::size_t context_dim, Rng& rng);
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

struct Mlp {
  Linear fc1;
  Linear fc2;

  static Mlp init(std::size_t dim, std::size_t hidden, Rng& rng);
  void visit(const std::string& prefix, const ParamVisitor& fn);
};

Tensor self_attention(const Tensor& x, const Attention& attn);
Tensor cross_attention(const Tensor& x, const Tensor& context, const Attention& attn);
// fc2(gelu(fc1(x)))
Tensor mlp(const Tensor& x, const Mlp& m);

}  // namespace frdiff::nn
