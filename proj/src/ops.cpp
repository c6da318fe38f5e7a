// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "frdiff/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "frdiff/errors.hpp"
#include "frdiff/op_counter.hpp"
#include "frdiff/tape.hpp"

namespace frdiff {

namespace {
thread_local std::uint64_t g_op_count = 0;
}

std::uint64_t op_count() { return g_op_count; }
void add_ops(std::uint64_t n) { g_op_count += n; }

}  // namespace frdiff

namespace frdiff::ops {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

using Grads = Tape::GradSlots;
using GradOut = std::span<const double>;

bool needs_grad(std::initializer_list<const Tensor*> inputs) {
  Tape* tape = active_tape();
  if (tape == nullptr) return false;
  for (const Tensor* t : inputs) {
    if (t != nullptr && tape->owns(*t)) return true;
  }
  return false;
}

Tensor finish(Tensor out, std::initializer_list<const Tensor*> inputs, Tape::BackwardFn fn) {
  return active_tape()->record(std::move(out), inputs, std::move(fn));
}

void require(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  require(t.defined() && t.rank() == rank,
          std::string(op) + ": expected rank " + std::to_string(rank) + " tensor, got " +
              (t.defined() ? shape_string(t.shape()) : std::string("undefined")));
}

// Element-wise binary op with scalar broadcast. DA/DB return the partial
// derivative with respect to each operand at (x, y).
template <class F, class DA, class DB>
Tensor binary(const char* name, const Tensor& a, const Tensor& b, F f, DA da, DB db) {
  const bool same = a.shape() == b.shape();
  const bool a_scalar = !same && a.numel() == 1;
  const bool b_scalar = !same && b.numel() == 1;
  require(same || a_scalar || b_scalar, std::string(name) + ": shape mismatch " +
                                            shape_string(a.shape()) + " vs " +
                                            shape_string(b.shape()));
  const Tensor& big = a_scalar ? b : a;
  const std::size_t n = big.numel();
  auto va = a.values();
  auto vb = b.values();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = f(va[a_scalar ? 0 : i], vb[b_scalar ? 0 : i]);
  }
  add_ops(n);
  Tensor result(big.shape(), std::move(out));
  if (!needs_grad({&a, &b})) return result;
  return finish(std::move(result), {&a, &b},
                [a, b, a_scalar, b_scalar, n, da, db](GradOut g, Grads gin) {
                  auto va = a.values();
                  auto vb = b.values();
                  for (std::size_t i = 0; i < n; ++i) {
                    const double x = va[a_scalar ? 0 : i];
                    const double y = vb[b_scalar ? 0 : i];
                    if (gin[0]) (*gin[0])[a_scalar ? 0 : i] += g[i] * da(x, y);
                    if (gin[1]) (*gin[1])[b_scalar ? 0 : i] += g[i] * db(x, y);
                  }
                });
}

// DF receives (input, output) and returns d output / d input.
template <class F, class DF>
Tensor unary(const Tensor& a, F f, DF df) {
  auto va = a.values();
  std::vector<double> out(va.size());
  for (std::size_t i = 0; i < va.size(); ++i) out[i] = f(va[i]);
  add_ops(va.size());
  Tensor result(a.shape(), std::move(out));
  if (!needs_grad({&a})) return result;
  return finish(result, {&a}, [a, result, df](GradOut g, Grads gin) {
    auto va = a.values();
    auto vy = result.values();
    auto& ga = *gin[0];
    for (std::size_t i = 0; i < va.size(); ++i) ga[i] += g[i] * df(va[i], vy[i]);
  });
}

double sigmoid_value(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; }, [](double, double) { return 1.0; },
      [](double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; }, [](double, double) { return 1.0; },
      [](double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y) { return y; },
      [](double x, double) { return x; });
}

Tensor scale(const Tensor& a, double c) {
  return unary(a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Tensor add_scalar(const Tensor& a, double c) {
  return unary(a, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Tensor square(const Tensor& a) {
  return unary(a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  add_ops(a.numel());
  Tensor result = Tensor::scalar(s);
  if (!needs_grad({&a})) return result;
  return finish(std::move(result), {&a}, [](GradOut g, Grads gin) {
    for (double& v : *gin[0]) v += g[0];
  });
}

Tensor mean(const Tensor& a) { return scale(sum(a), 1.0 / static_cast<double>(a.numel())); }

Tensor mse(const Tensor& a, const Tensor& b) { return mean(square(sub(a, b))); }

Tensor squared_distance(const Tensor& a, const Tensor& b) { return sum(square(sub(a, b))); }

Tensor sigmoid(const Tensor& a) {
  return unary(a, sigmoid_value, [](double, double y) { return y * (1.0 - y); });
}

// Subgradient 0 at the kink.
Tensor relu(const Tensor& a) {
  return unary(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor silu(const Tensor& a) {
  return unary(
      a, [](double x) { return x * sigmoid_value(x); },
      [](double x, double) {
        const double s = sigmoid_value(x);
        return s + x * s * (1.0 - s);
      });
}

Tensor gelu(const Tensor& a) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  return unary(
      a, [](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); },
      [](double x, double) {
        return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
      });
}

Tensor round_ste(const Tensor& a) {
  return unary(
      a, [](double x) { return x >= 0.5 ? 1.0 : 0.0; }, [](double, double) { return 1.0; });
}

Tensor reshape(const Tensor& a, Shape shape) {
  Tensor result = a.with_shape(std::move(shape));
  if (!needs_grad({&a})) return result;
  return finish(std::move(result), {&a}, [](GradOut g, Grads gin) {
    auto& ga = *gin[0];
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Tensor gather(const Tensor& a, Shape shape, std::vector<std::size_t> index) {
  require(shape_numel(shape) == index.size(), "gather: index count does not match shape");
  auto va = a.values();
  std::vector<double> out(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    require(index[i] < va.size(), "gather: index out of range");
    out[i] = va[index[i]];
  }
  add_ops(index.size());
  Tensor result(std::move(shape), std::move(out));
  if (!needs_grad({&a})) return result;
  return finish(std::move(result), {&a}, [index = std::move(index)](GradOut g, Grads gin) {
    auto& ga = *gin[0];
    for (std::size_t i = 0; i < index.size(); ++i) ga[index[i]] += g[i];
  });
}

Tensor transpose(const Tensor& a) {
  require_rank(a, 2, "transpose");
  const std::size_t r = a.dim(0), c = a.dim(1);
  std::vector<std::size_t> idx(r * c);
  for (std::size_t i = 0; i < c; ++i) {
    for (std::size_t j = 0; j < r; ++j) idx[i * r + j] = j * c + i;
  }
  return gather(a, {c, r}, std::move(idx));
}

Tensor slice(const Tensor& v, std::size_t offset, std::size_t length) {
  require(offset + length <= v.numel(), "slice: range exceeds tensor");
  std::vector<std::size_t> idx(length);
  for (std::size_t i = 0; i < length; ++i) idx[i] = offset + i;
  return gather(v, {length}, std::move(idx));
}

Tensor to_tokens(const Tensor& x) {
  require_rank(x, 3, "to_tokens");
  const std::size_t c = x.dim(0), hw = x.dim(1) * x.dim(2);
  std::vector<std::size_t> idx(c * hw);
  for (std::size_t p = 0; p < hw; ++p) {
    for (std::size_t ch = 0; ch < c; ++ch) idx[p * c + ch] = ch * hw + p;
  }
  return gather(x, {hw, c}, std::move(idx));
}

Tensor from_tokens(const Tensor& tokens, std::size_t h, std::size_t w) {
  require_rank(tokens, 2, "from_tokens");
  require(tokens.dim(0) == h * w, "from_tokens: token count does not match h*w");
  const std::size_t c = tokens.dim(1), hw = h * w;
  std::vector<std::size_t> idx(c * hw);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t p = 0; p < hw; ++p) idx[ch * hw + p] = p * c + ch;
  }
  return gather(tokens, {c, h, w}, std::move(idx));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  require(b.dim(0) == k, "matmul: inner extents differ " + shape_string(a.shape()) + " * " +
                             shape_string(b.shape()));
  std::vector<double> out(m * n);
  MutMap(out.data(), m, n).noalias() =
      ConstMap(a.values().data(), m, k) * ConstMap(b.values().data(), k, n);
  add_ops(m * k * n);
  Tensor result({m, n}, std::move(out));
  if (!needs_grad({&a, &b})) return result;
  return finish(std::move(result), {&a, &b}, [a, b, m, k, n](GradOut g, Grads gin) {
    ConstMap gm(g.data(), m, n);
    if (gin[0]) {
      MutMap(gin[0]->data(), m, k).noalias() += gm * ConstMap(b.values().data(), k, n).transpose();
    }
    if (gin[1]) {
      MutMap(gin[1]->data(), k, n).noalias() += ConstMap(a.values().data(), m, k).transpose() * gm;
    }
  });
}

Tensor add_row_vector(const Tensor& x, const Tensor& v) {
  require_rank(x, 2, "add_row_vector");
  const std::size_t n = x.dim(0), d = x.dim(1);
  require(v.numel() == d, "add_row_vector: vector length " + std::to_string(v.numel()) +
                              " does not match row width " + std::to_string(d));
  auto vx = x.values();
  auto vv = v.values();
  std::vector<double> out(n * d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) out[r * d + c] = vx[r * d + c] + vv[c];
  }
  add_ops(n * d);
  Tensor result(x.shape(), std::move(out));
  if (!needs_grad({&x, &v})) return result;
  return finish(std::move(result), {&x, &v}, [n, d](GradOut g, Grads gin) {
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < d; ++c) {
        if (gin[0]) (*gin[0])[r * d + c] += g[r * d + c];
        if (gin[1]) (*gin[1])[c] += g[r * d + c];
      }
    }
  });
}

Tensor mul_row_vector(const Tensor& x, const Tensor& v) {
  require_rank(x, 2, "mul_row_vector");
  const std::size_t n = x.dim(0), d = x.dim(1);
  require(v.numel() == d, "mul_row_vector: vector length does not match row width");
  auto vx = x.values();
  auto vv = v.values();
  std::vector<double> out(n * d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) out[r * d + c] = vx[r * d + c] * vv[c];
  }
  add_ops(n * d);
  Tensor result(x.shape(), std::move(out));
  if (!needs_grad({&x, &v})) return result;
  return finish(std::move(result), {&x, &v}, [x, v, n, d](GradOut g, Grads gin) {
    auto vx = x.values();
    auto vv = v.values();
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < d; ++c) {
        if (gin[0]) (*gin[0])[r * d + c] += g[r * d + c] * vv[c];
        if (gin[1]) (*gin[1])[c] += g[r * d + c] * vx[r * d + c];
      }
    }
  });
}

Tensor add_channel_vector(const Tensor& x, const Tensor& v) {
  require_rank(x, 3, "add_channel_vector");
  const std::size_t c = x.dim(0), hw = x.dim(1) * x.dim(2);
  require(v.numel() == c, "add_channel_vector: vector length does not match channels");
  auto vx = x.values();
  auto vv = v.values();
  std::vector<double> out(c * hw);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t p = 0; p < hw; ++p) out[ch * hw + p] = vx[ch * hw + p] + vv[ch];
  }
  add_ops(c * hw);
  Tensor result(x.shape(), std::move(out));
  if (!needs_grad({&x, &v})) return result;
  return finish(std::move(result), {&x, &v}, [c, hw](GradOut g, Grads gin) {
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t p = 0; p < hw; ++p) {
        if (gin[0]) (*gin[0])[ch * hw + p] += g[ch * hw + p];
        if (gin[1]) (*gin[1])[ch] += g[ch * hw + p];
      }
    }
  });
}

Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias) {
  require_rank(x, 3, "conv2d");
  require_rank(kernel, 4, "conv2d");
  const std::size_t cin = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t cout = kernel.dim(0), ks = kernel.dim(2);
  require(kernel.dim(1) == cin, "conv2d: kernel expects " + std::to_string(kernel.dim(1)) +
                                    " input channels, got " + std::to_string(cin));
  require(ks == kernel.dim(3) && (ks == 1 || ks == 3), "conv2d: only 1x1 and 3x3 kernels");
  require(!bias.defined() || bias.numel() == cout, "conv2d: bias length mismatch");
  const std::ptrdiff_t pad = static_cast<std::ptrdiff_t>(ks / 2);
  const std::size_t hw = h * w, rows = cin * ks * ks;

  // im2col: cols[(c, ky, kx), (y, x)]
  auto cols = std::make_shared<std::vector<double>>(rows * hw, 0.0);
  auto vx = x.values();
  for (std::size_t ch = 0; ch < cin; ++ch) {
    for (std::size_t ky = 0; ky < ks; ++ky) {
      for (std::size_t kx = 0; kx < ks; ++kx) {
        double* row = cols->data() + ((ch * ks + ky) * ks + kx) * hw;
        for (std::size_t y = 0; y < h; ++y) {
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - pad;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
          for (std::size_t xx = 0; xx < w; ++xx) {
            const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(xx + kx) - pad;
            if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w)) continue;
            row[y * w + xx] = vx[(ch * h + sy) * w + sx];
          }
        }
      }
    }
  }
  std::vector<double> out(cout * hw);
  MutMap om(out.data(), cout, hw);
  om.noalias() = ConstMap(kernel.values().data(), cout, rows) * ConstMap(cols->data(), rows, hw);
  if (bias.defined()) {
    auto vb = bias.values();
    for (std::size_t o = 0; o < cout; ++o) om.row(o).array() += vb[o];
  }
  add_ops(cout * rows * hw);
  Tensor result({cout, h, w}, std::move(out));
  if (!needs_grad({&x, &kernel, &bias})) return result;
  return finish(std::move(result), {&x, &kernel, &bias},
                [kernel, cols, cin, h, w, cout, ks, pad, hw, rows](GradOut g, Grads gin) {
                  ConstMap gm(g.data(), cout, hw);
                  if (gin[1]) {
                    MutMap(gin[1]->data(), cout, rows).noalias() +=
                        gm * ConstMap(cols->data(), rows, hw).transpose();
                  }
                  if (gin[2]) {
                    for (std::size_t o = 0; o < cout; ++o) (*gin[2])[o] += gm.row(o).sum();
                  }
                  if (gin[0]) {
                    RowMajor gcols = ConstMap(kernel.values().data(), cout, rows).transpose() * gm;
                    auto& gx = *gin[0];
                    for (std::size_t ch = 0; ch < cin; ++ch) {
                      for (std::size_t ky = 0; ky < ks; ++ky) {
                        for (std::size_t kx = 0; kx < ks; ++kx) {
                          const double* row = gcols.data() + ((ch * ks + ky) * ks + kx) * hw;
                          for (std::size_t y = 0; y < h; ++y) {
                            const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - pad;
                            if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
                            for (std::size_t xx = 0; xx < w; ++xx) {
                              const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(xx + kx) - pad;
                              if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w)) continue;
                              gx[(ch * h + sy) * w + sx] += row[y * w + xx];
                            }
                          }
                        }
                      }
                    }
                  }
                });
}

namespace {

// Normalises `count` contiguous segments of length `len` each and applies a
// per-segment-element affine: y = gamma[aff(j)] * xhat + beta[aff(j)].
// Shared by groupnorm (segments are groups) and layernorm (segments are rows).
template <class AffineIndex>
Tensor normalize_segments(const Tensor& x, std::size_t count, std::size_t len,
                          const Tensor& gamma, const Tensor& beta, double eps,
                          AffineIndex affine_index) {
  auto vx = x.values();
  const bool has_gamma = gamma.defined();
  const bool has_beta = beta.defined();
  auto xhat = std::make_shared<std::vector<double>>(count * len);
  auto inv_std = std::make_shared<std::vector<double>>(count);
  std::vector<double> out(count * len);
  for (std::size_t s = 0; s < count; ++s) {
    const double* seg = vx.data() + s * len;
    double mu = 0.0;
    for (std::size_t j = 0; j < len; ++j) mu += seg[j];
    mu /= static_cast<double>(len);
    double var = 0.0;
    for (std::size_t j = 0; j < len; ++j) var += (seg[j] - mu) * (seg[j] - mu);
    var /= static_cast<double>(len);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[s] = is;
    for (std::size_t j = 0; j < len; ++j) {
      const double xh = (seg[j] - mu) * is;
      (*xhat)[s * len + j] = xh;
      const std::size_t a = affine_index(s, j);
      const double gmul = has_gamma ? gamma[a] : 1.0;
      const double badd = has_beta ? beta[a] : 0.0;
      out[s * len + j] = gmul * xh + badd;
    }
  }
  add_ops(4 * count * len);
  Tensor result(x.shape(), std::move(out));
  if (!needs_grad({&x, &gamma, &beta})) return result;
  return finish(std::move(result), {&x, &gamma, &beta},
                [gamma, has_gamma, xhat, inv_std, count, len, affine_index](GradOut g, Grads gin) {
                  std::vector<double> gxh(len);
                  for (std::size_t s = 0; s < count; ++s) {
                    double mean_g = 0.0, mean_gx = 0.0;
                    for (std::size_t j = 0; j < len; ++j) {
                      const std::size_t i = s * len + j;
                      const std::size_t a = affine_index(s, j);
                      const double xh = (*xhat)[i];
                      if (gin[1]) (*gin[1])[a] += g[i] * xh;
                      if (gin[2]) (*gin[2])[a] += g[i];
                      gxh[j] = g[i] * (has_gamma ? gamma[a] : 1.0);
                      mean_g += gxh[j];
                      mean_gx += gxh[j] * xh;
                    }
                    if (!gin[0]) continue;
                    mean_g /= static_cast<double>(len);
                    mean_gx /= static_cast<double>(len);
                    const double is = (*inv_std)[s];
                    for (std::size_t j = 0; j < len; ++j) {
                      const std::size_t i = s * len + j;
                      (*gin[0])[i] += is * (gxh[j] - mean_g - (*xhat)[i] * mean_gx);
                    }
                  }
                });
}

}  // namespace

Tensor groupnorm(const Tensor& x, std::size_t groups, const Tensor& gamma, const Tensor& beta,
                 double eps) {
  require_rank(x, 3, "groupnorm");
  const std::size_t c = x.dim(0), hw = x.dim(1) * x.dim(2);
  require(groups > 0 && c % groups == 0, "groupnorm: " + std::to_string(c) +
                                             " channels not divisible into " +
                                             std::to_string(groups) + " groups");
  require(gamma.numel() == c && beta.numel() == c, "groupnorm: affine length mismatch");
  const std::size_t per_group = c / groups;
  return normalize_segments(x, groups, per_group * hw, gamma, beta, eps,
                            [per_group, hw](std::size_t s, std::size_t j) {
                              return s * per_group + j / hw;
                            });
}

Tensor layernorm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  require_rank(x, 2, "layernorm");
  const std::size_t n = x.dim(0), d = x.dim(1);
  require(!gamma.defined() || gamma.numel() == d, "layernorm: gamma length mismatch");
  require(!beta.defined() || beta.numel() == d, "layernorm: beta length mismatch");
  return normalize_segments(x, n, d, gamma, beta, eps,
                            [](std::size_t, std::size_t j) { return j; });
}

Tensor softmax(const Tensor& x) {
  require_rank(x, 2, "softmax");
  const std::size_t n = x.dim(0), m = x.dim(1);
  auto vx = x.values();
  std::vector<double> out(n * m);
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = vx.data() + r * m;
    const double mx = *std::max_element(row, row + m);
    double z = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      out[r * m + j] = std::exp(row[j] - mx);
      z += out[r * m + j];
    }
    for (std::size_t j = 0; j < m; ++j) out[r * m + j] /= z;
  }
  add_ops(3 * n * m);
  Tensor result(x.shape(), std::move(out));
  if (!needs_grad({&x})) return result;
  return finish(result, {&x}, [result, n, m](GradOut g, Grads gin) {
    auto y = result.values();
    auto& gx = *gin[0];
    for (std::size_t r = 0; r < n; ++r) {
      double dot = 0.0;
      for (std::size_t j = 0; j < m; ++j) dot += g[r * m + j] * y[r * m + j];
      for (std::size_t j = 0; j < m; ++j) gx[r * m + j] += y[r * m + j] * (g[r * m + j] - dot);
    }
  });
}

Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v) {
  require_rank(q, 2, "attention");
  require_rank(k, 2, "attention");
  require_rank(v, 2, "attention");
  require(q.dim(1) == k.dim(1), "attention: query/key widths differ");
  require(k.dim(0) == v.dim(0), "attention: key/value counts differ");
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(q.dim(1)));
  Tensor scores = scale(matmul(q, transpose(k)), inv_sqrt_d);
  return matmul(softmax(scores), v);
}

}  // namespace frdiff::ops
