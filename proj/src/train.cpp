// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "frdiff/train.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <string>

#include "frdiff/adam.hpp"
#include "frdiff/errors.hpp"
#include "frdiff/ops.hpp"
#include "frdiff/rng.hpp"
#include "frdiff/tape.hpp"

namespace frdiff {

TrainResult train_toy(ScoreNetwork& net, const Dataset& data, const NoiseSchedule& schedule,
                      const TrainConfig& config) {
  TrainResult result;
  if (config.steps == 0) return result;
  if (data.size() == 0) throw ConfigError("train: empty dataset");
  if (config.batch == 0) throw ConfigError("train: batch must be positive");
  if (data.sample_shape() != net.sample_shape()) {
    throw DimensionError("train: dataset samples " + shape_string(data.sample_shape()) +
                         " do not match the network input " + shape_string(net.sample_shape()));
  }

  Rng rng(config.seed);
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  std::uniform_int_distribution<int> pick_t(1, schedule.horizon());
  std::bernoulli_distribution drop(config.cond_drop);
  Adam adam({.lr = config.lr});
  auto params = net.parameters();
  std::vector<Tensor*> handles;
  for (auto& [name, p] : params) handles.push_back(p);

  for (std::size_t step = 1; step <= config.steps; ++step) {
    Tape tape;
    TapeScope scope(tape);
    for (Tensor* p : handles) *p = tape.watch(*p);

    Tensor loss;
    for (std::size_t b = 0; b < config.batch; ++b) {
      const std::size_t i = pick(rng);
      const int t = pick_t(rng);
      const int label = drop(rng) ? kUnconditional : data.labels[i];
      Tensor eps = normal_tensor(net.sample_shape(), rng);
      const double ab = schedule.alpha_bar(t);
      Tensor x_t = ops::add(ops::scale(data.images[i], std::sqrt(ab)), ops::scale(eps, std::sqrt(1.0 - ab)));
      Tensor term = ops::mse(net.forward(x_t, t, label), eps);
      loss = loss.defined() ? ops::add(loss, term) : term;
    }
    loss = ops::scale(loss, 1.0 / static_cast<double>(config.batch));
    const double value = loss.item();
    if (!std::isfinite(value)) {
      for (Tensor* p : handles) *p = p->detach();
      throw NumericalError("train: loss became " + std::to_string(value) + " at step " +
                           std::to_string(step));
    }
    Gradients grads = tape.backward(loss);
    std::vector<Tensor> g;
    g.reserve(handles.size());
    for (Tensor* p : handles) g.push_back(grads.of(*p));
    adam.step(handles, g);
    result.losses.push_back(value);
  }
  return result;
}

double evaluate_loss(const ScoreNetwork& net, const Dataset& data, const NoiseSchedule& schedule,
                     std::size_t samples, std::uint64_t seed) {
  if (data.size() == 0 || samples == 0) throw ConfigError("evaluate_loss: nothing to evaluate");
  NoGradScope no_grad;
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  std::uniform_int_distribution<int> pick_t(1, schedule.horizon());
  double total = 0.0;
  for (std::size_t k = 0; k < samples; ++k) {
    const std::size_t i = pick(rng);
    const int t = pick_t(rng);
    Tensor eps = normal_tensor(net.sample_shape(), rng);
    const double ab = schedule.alpha_bar(t);
    Tensor x_t = ops::add(ops::scale(data.images[i], std::sqrt(ab)), ops::scale(eps, std::sqrt(1.0 - ab)));
    total += ops::mse(net.forward(x_t, t, data.labels[i]), eps).item();
  }
  return total / static_cast<double>(samples);
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<double>& losses) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(10);
  out << "step,loss\n";
  for (std::size_t i = 0; i < losses.size(); ++i) out << i + 1 << ',' << losses[i] << '\n';
}

}  // namespace frdiff
