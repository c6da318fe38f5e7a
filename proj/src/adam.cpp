// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "frdiff/adam.hpp"

#include <cmath>

#include "frdiff/errors.hpp"

namespace frdiff {

void Adam::update(std::size_t group, std::span<double> p, std::span<const double> g) {
  if (p.size() != g.size()) throw DimensionError("adam: gradient size does not match parameter");
  if (m_.size() <= group) {
    m_.resize(group + 1);
    v_.resize(group + 1);
  }
  if (m_[group].empty()) {
    m_[group].assign(p.size(), 0.0);
    v_[group].assign(p.size(), 0.0);
  }
  if (m_[group].size() != p.size()) throw ContractError("adam: parameter layout changed");
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  auto& m = m_[group];
  auto& v = v_[group];
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = b1 * m[i] + (1.0 - b1) * g[i];
    v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
    p[i] -= config_.lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.eps);
  }
}

void Adam::step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads) {
  if (params.size() != grads.size()) throw DimensionError("adam: parameter/gradient count mismatch");
  ++t_;
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::vector<double> values = params[i]->to_vector();
    update(i, values, grads[i].values());
    *params[i] = Tensor(params[i]->shape(), std::move(values));
  }
}

void Adam::step(std::span<double> params, std::span<const double> grads) {
  ++t_;
  update(0, params, grads);
}

}  // namespace frdiff
