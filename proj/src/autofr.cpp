// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "frdiff/autofr.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "frdiff/adam.hpp"
#include "frdiff/errors.hpp"
#include "frdiff/ops.hpp"
#include "frdiff/parallel.hpp"
#include "frdiff/tape.hpp"
#include "frdiff/tensor_io.hpp"

namespace frdiff {

namespace {

double sigmoid_value(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Tensor one_minus(const Tensor& a) { return ops::add_scalar(ops::scale(a, -1.0), 1.0); }

class GatedExecutor : public BlockExecutor {
 public:
  GatedExecutor(std::vector<Tensor>& memory, const Tensor& gate, const ReuseScope& scope)
      : memory_(memory), gate_(gate), scope_(scope) {}

  Tensor run(std::size_t layer, const ResidualBlock& block, const Tensor& x,
             const Conditioning& cond) override {
    if (!scope_.contains(block.kind())) return block.forward(x, cond);
    return gated_forward(block, x, cond, gate_, memory_.at(layer));
  }

 private:
  std::vector<Tensor>& memory_;
  const Tensor& gate_;
  const ReuseScope& scope_;
};

}  // namespace

GateParams GateParams::init(int steps, double theta_init) {
  if (steps < 1) throw ConfigError("autofr: step count must be >= 1");
  GateParams g;
  g.theta.assign(steps, theta_init);
  g.theta[0] = std::numeric_limits<double>::infinity();
  return g;
}

KeyframeSet GateParams::keyframes() const {
  std::vector<int> members;
  for (int n = 1; n <= steps(); ++n) {
    if (theta[n - 1] >= 0.0) members.push_back(n);
  }
  return KeyframeSet(steps(), std::move(members));
}

std::vector<Tensor> GateParams::hard_gates() const {
  std::vector<Tensor> gates;
  for (double th : theta) gates.push_back(Tensor::scalar(sigmoid_value(th) >= 0.5 ? 1.0 : 0.0));
  return gates;
}

double cost_loss(std::span<const double> theta) {
  double c = 0.0;
  for (double th : theta) c += std::max(0.0, sigmoid_value(th) - 0.5);
  return c;
}

Tensor cost_loss(const Tensor& theta) {
  return ops::sum(ops::relu(ops::add_scalar(ops::sigmoid(theta), -0.5)));
}

Tensor gated_forward(const ResidualBlock& block, const Tensor& x, const Conditioning& cond,
                     const Tensor& gate, Tensor& memory) {
  Tensor s = block.prefix(x, cond);
  memory = memory.defined() ? ops::add(ops::mul(gate, s), ops::mul(one_minus(gate), memory)) : s;
  return ops::add(block.suffix(memory, cond), x);
}

Tensor gated_score_memory(const Tensor& eps, Tensor& memory, const Tensor& gate, double lambda) {
  memory = memory.defined() ? ops::add(ops::mul(gate, eps), ops::mul(one_minus(gate), memory)) : eps;
  return ops::add(ops::scale(eps, lambda), ops::scale(memory, 1.0 - lambda));
}

Tensor gated_sample(const ScoreNetwork& net, const NoiseSchedule& schedule,
                    const SamplerConfig& config, const MixingSchedule& mixing,
                    const std::vector<Tensor>& gates, const ReuseScope& scope) {
  if (config.solver != Solver::ddim) throw ConfigError("gated sampling supports the ddim solver only");
  const std::vector<int> times = sampling_times(schedule.horizon(), config.steps);
  if (gates.size() != times.size()) {
    throw DimensionError("gated_sample: " + std::to_string(gates.size()) + " gates for " +
                         std::to_string(times.size()) + " steps");
  }
  const std::vector<int> labels = branch_labels(config);
  std::vector<std::vector<Tensor>> memory(labels.size(), std::vector<Tensor>(net.layer_count()));
  std::vector<Tensor> score_memory(labels.size());

  Tensor x = initial_noise(net, config.seed);
  const int steps = static_cast<int>(times.size());
  for (int n = 1; n <= steps; ++n) {
    const int t = times[n - 1], t_prev = n < steps ? times[n] : 0;
    const double lambda = lambda_of(n, steps, mixing);
    std::vector<Tensor> mixed;
    for (std::size_t b = 0; b < labels.size(); ++b) {
      GatedExecutor exec(memory[b], gates[n - 1], scope);
      Tensor eps = net.forward(x, t, labels[b], &exec);
      mixed.push_back(gated_score_memory(eps, score_memory[b], gates[n - 1], lambda));
    }
    x = ddim_step(x, combine_branches(mixed, config), t, t_prev, schedule);
  }
  return x;
}

namespace {

struct SeedResult {
  double fidelity = 0.0;
  std::vector<double> grad;  // d fidelity / d theta[1..]
};

// Gates for iteration 1 (constant open) and the tracked free logits.
std::vector<Tensor> gates_from(const Tensor& free_theta) {
  std::vector<Tensor> gates{Tensor::scalar(1.0)};
  Tensor hard = ops::round_ste(ops::sigmoid(free_theta));
  for (std::size_t i = 0; i < free_theta.numel(); ++i) gates.push_back(ops::slice(hard, i, 1));
  return gates;
}

std::string describe_theta(const std::vector<double>& theta) {
  std::ostringstream s;
  s << "theta = [";
  for (std::size_t i = 0; i < theta.size(); ++i) s << (i ? ", " : "") << theta[i];
  s << "]";
  return s.str();
}

}  // namespace

AutoFrResult autofr_search(const ScoreNetwork& net, const NoiseSchedule& schedule,
                           const SamplerConfig& sampler, const MixingSchedule& mixing,
                           const AutoFrConfig& config, const ReuseScope& scope,
                           const std::optional<std::filesystem::path>& ground_truth_dir) {
  if (config.iterations < 1) throw ConfigError("autofr: iterations must be >= 1");
  if (config.batch < 1) throw ConfigError("autofr: batch must be >= 1");
  if (config.cost_lambda < 0.0) throw ConfigError("autofr: cost_lambda must be >= 0");
  const int steps = sampler.steps;
  const std::size_t batch = static_cast<std::size_t>(config.batch);

  std::vector<SamplerConfig> seeds(batch, sampler);
  std::vector<Tensor> truth(batch);
  for (std::size_t j = 0; j < batch; ++j) seeds[j].seed = config.seed + j;
  parallel_for(batch, config.threads, [&](std::size_t j) {
    truth[j] = sample(net, schedule, seeds[j]).final_sample;
  });
  if (ground_truth_dir) {
    for (std::size_t j = 0; j < batch; ++j) {
      write_tensor(*ground_truth_dir, "x_gt_seed" + std::to_string(seeds[j].seed), truth[j]);
    }
  }

  GateParams gates = GateParams::init(steps, config.theta_init);
  Adam adam({.lr = config.lr, .beta1 = config.beta1, .beta2 = config.beta2});
  AutoFrResult result{gates, gates.keyframes(), {}, {}};
  const std::size_t free = static_cast<std::size_t>(steps - 1);

  for (int it = 0; it <= config.iterations; ++it) {
    const bool update = it < config.iterations;
    const std::vector<double> free_theta(gates.theta.begin() + 1, gates.theta.end());
    std::vector<SeedResult> per_seed(batch);

    parallel_for(batch, config.threads, [&](std::size_t j) {
      if (!update) {
        NoGradScope no_grad;
        Tensor x_hat = gated_sample(net, schedule, seeds[j], mixing, gates.hard_gates(), scope);
        per_seed[j].fidelity = ops::squared_distance(truth[j], x_hat).item();
        return;
      }
      Tape tape;
      TapeScope scope_guard(tape);
      Tensor theta = free > 0 ? tape.watch(Tensor({free}, free_theta)) : Tensor();
      std::vector<Tensor> g = free > 0 ? gates_from(theta) : std::vector<Tensor>{Tensor::scalar(1.0)};
      Tensor x_hat = gated_sample(net, schedule, seeds[j], mixing, g, scope);
      Tensor loss = ops::squared_distance(truth[j], x_hat);
      per_seed[j].fidelity = loss.item();
      if (free > 0 && std::isfinite(per_seed[j].fidelity)) {
        per_seed[j].grad = tape.backward(loss).of(theta).to_vector();
      }
    });

    AutoFrRecord rec;
    rec.iteration = it;
    for (std::size_t j = 0; j < batch; ++j) rec.fidelity += per_seed[j].fidelity / batch;
    rec.cost = cost_loss(gates.theta);
    rec.total = rec.fidelity + config.cost_lambda * rec.cost;
    rec.keyframes = static_cast<int>(gates.keyframes().size());
    if (!std::isfinite(rec.total)) {
      throw NumericalError("autofr: loss became " + std::to_string(rec.total) + " at iteration " +
                           std::to_string(it) + " (fidelity " + std::to_string(rec.fidelity) +
                           ", cost " + std::to_string(rec.cost) + "); " +
                           describe_theta(gates.theta));
    }
    result.history.push_back(rec);
    result.theta_history.push_back(gates.theta);
    if (!update || free == 0) {
      if (free == 0) break;
      continue;
    }

    std::vector<double> grad(free, 0.0);
    for (std::size_t j = 0; j < batch; ++j) {
      for (std::size_t i = 0; i < free; ++i) grad[i] += per_seed[j].grad[i] / batch;
    }
    {
      Tape tape;
      TapeScope scope_guard(tape);
      Tensor theta = tape.watch(Tensor({free}, free_theta));
      Tensor cost = ops::scale(cost_loss(theta), config.cost_lambda);
      Tensor cg = tape.backward(cost).of(theta);
      for (std::size_t i = 0; i < free; ++i) grad[i] += cg[i];
    }
    adam.step(std::span<double>(gates.theta).subspan(1), grad);
  }

  result.gates = gates;
  result.keyframes = gates.keyframes();
  return result;
}

void write_autofr_csvs(const std::filesystem::path& dir, const AutoFrResult& result) {
  std::filesystem::create_directories(dir);
  std::ofstream loss(dir / "autofr_loss.csv", std::ios::trunc);
  std::ofstream theta(dir / "theta_history.csv", std::ios::trunc);
  if (!loss || !theta) throw IoError("cannot write autofr CSVs in " + dir.string());
  loss.precision(10);
  theta.precision(10);
  loss << "iteration,total,fidelity,cost,keyframes\n";
  for (const auto& r : result.history) {
    loss << r.iteration << ',' << r.total << ',' << r.fidelity << ',' << r.cost << ',' << r.keyframes
         << '\n';
  }
  theta << "iteration";
  const int steps = result.gates.steps();
  for (int n = 1; n <= steps; ++n) theta << ",theta_" << n;
  theta << '\n';
  for (std::size_t k = 0; k < result.theta_history.size(); ++k) {
    theta << k;
    for (double v : result.theta_history[k]) theta << ',' << v;
    theta << '\n';
  }
}

}  // namespace frdiff
