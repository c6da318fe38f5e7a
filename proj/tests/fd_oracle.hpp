// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

// Central finite differences on Tensor-valued functions, used as the
// reference for every analytic gradient.

#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "frdiff/tape.hpp"
#include "frdiff/tensor.hpp"

namespace frdiff::testing {

using ScalarFn = std::function<Tensor(const std::vector<Tensor>&)>;

inline std::vector<Tensor> numeric_gradients(const ScalarFn& f, const std::vector<Tensor>& inputs,
                                             double h = 1e-5) {
  NoGradScope no_grad;
  std::vector<Tensor> grads;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    std::vector<double> g(inputs[k].numel());
    for (std::size_t i = 0; i < g.size(); ++i) {
      std::vector<Tensor> plus = inputs, minus = inputs;
      std::vector<double> vp = inputs[k].to_vector(), vm = vp;
      vp[i] += h;
      vm[i] -= h;
      plus[k] = Tensor(inputs[k].shape(), vp);
      minus[k] = Tensor(inputs[k].shape(), vm);
      g[i] = (f(plus).item() - f(minus).item()) / (2.0 * h);
    }
    grads.emplace_back(inputs[k].shape(), std::move(g));
  }
  return grads;
}

inline std::vector<Tensor> analytic_gradients(const ScalarFn& f, const std::vector<Tensor>& inputs) {
  Tape tape;
  TapeScope scope(tape);
  std::vector<Tensor> watched;
  for (const auto& x : inputs) watched.push_back(tape.watch(x));
  Gradients g = tape.backward(f(watched));
  std::vector<Tensor> out;
  for (const auto& w : watched) out.push_back(g.of(w));
  return out;
}

// Largest |analytic - numeric| / max(1, |numeric|) over all inputs.
inline double gradient_error(const ScalarFn& f, const std::vector<Tensor>& inputs, double h = 1e-5) {
  const auto a = analytic_gradients(f, inputs);
  const auto n = numeric_gradients(f, inputs, h);
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    for (std::size_t i = 0; i < a[k].numel(); ++i) {
      const double err = std::abs(a[k][i] - n[k][i]) / std::max(1.0, std::abs(n[k][i]));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace frdiff::testing
