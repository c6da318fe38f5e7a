// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "frdiff/tensor.hpp"

// Differentiable tensor operations. Each op computes its forward value
// eagerly and, if any input is tracked on the active tape, records the local
// gradient rule. Element-wise binary ops require identical shapes; the only
// implicit broadcast is a one-element tensor against any tensor.
namespace frdiff::ops {

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor add_scalar(const Tensor& a, double c);
Tensor square(const Tensor& a);

Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// mean((a - b)^2)
Tensor mse(const Tensor& a, const Tensor& b);
// sum((a - b)^2)
Tensor squared_distance(const Tensor& a, const Tensor& b);

Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor silu(const Tensor& a);
Tensor gelu(const Tensor& a);

// Forward: 1 if a >= 0.5 else 0. Backward: identity.
Tensor round_ste(const Tensor& a);

Tensor reshape(const Tensor& a, Shape shape);
// out.flat[i] = a.flat[index[i]]; gradient scatters back.
Tensor gather(const Tensor& a, Shape shape, std::vector<std::size_t> index);
Tensor transpose(const Tensor& a);
Tensor slice(const Tensor& v, std::size_t offset, std::size_t length);
// [c x h x w] <-> [(h*w) x c]
Tensor to_tokens(const Tensor& x);
Tensor from_tokens(const Tensor& tokens, std::size_t h, std::size_t w);

Tensor matmul(const Tensor& a, const Tensor& b);
// x[n x d] + v[d] on every row
Tensor add_row_vector(const Tensor& x, const Tensor& v);
// x[n x d] * v[d] on every row
Tensor mul_row_vector(const Tensor& x, const Tensor& v);
// x[c x h x w] + v[c] on every spatial position
Tensor add_channel_vector(const Tensor& x, const Tensor& v);

// Cross-correlation with zero padding that preserves spatial extents.
// Kernel is [c_out x c_in x k x k] with k in {1, 3}; bias may be undefined.
Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias);

inline constexpr double kNormEps = 1e-5;

// x[c x h x w]; gamma/beta [c].
Tensor groupnorm(const Tensor& x, std::size_t groups, const Tensor& gamma, const Tensor& beta,
                 double eps = kNormEps);
// Row-wise over x[n x d]; gamma/beta may be undefined for a plain normalisation.
Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps = kNormEps);

// Row-wise softmax over x[n x m].
Tensor softmax(const Tensor& x);
// softmax(q k^T / sqrt(d)) v for q[n x d], k[m x d], v[m x e].
Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v);

}  // namespace frdiff::ops
