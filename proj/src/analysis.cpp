// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "frdiff/analysis.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>

#include "frdiff/errors.hpp"
#include "frdiff/op_counter.hpp"
#include "frdiff/parallel.hpp"
#include "frdiff/tape.hpp"

namespace frdiff {

namespace {

class RecordingExecutor : public BlockExecutor {
 public:
  explicit RecordingExecutor(std::vector<Tensor>& out) : out_(out) {}
  Tensor run(std::size_t, const ResidualBlock& block, const Tensor& x,
             const Conditioning& cond) override {
    Tensor y = block.forward(x, cond);
    out_.push_back(y);
    return y;
  }

 private:
  std::vector<Tensor>& out_;
};

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.precision(12);
  return out;
}

}  // namespace

Tensor FeatureRecorder::score(const ScoreNetwork& net, const StepContext& ctx, const Tensor& x,
                              StepRecord& record) {
  const std::vector<int> labels = branch_labels(config_);
  std::vector<Tensor> eps;
  trace_.emplace_back();
  RecordingExecutor rec(trace_.back());
  eps.push_back(net.forward(x, ctx.time, labels[0], &rec));
  for (std::size_t b = 1; b < labels.size(); ++b) eps.push_back(net.forward(x, ctx.time, labels[b]));
  record.network_evals = static_cast<int>(labels.size());
  record.s_ops_executed = net.layer_count() * labels.size();
  return combine_branches(eps, config_);
}

FeatureTrace record_features(const ScoreNetwork& net, const NoiseSchedule& schedule,
                             const SamplerConfig& config) {
  FeatureRecorder rec(config);
  sample(net, schedule, config, &rec);
  return rec.trace();
}

SimilarityReport temporal_change(const std::vector<FeatureTrace>& traces, int delta) {
  if (delta == 0) throw ConfigError("temporal change needs a nonzero time gap");
  if (delta < 0) delta = -delta;
  if (traces.empty()) throw ConfigError("temporal change needs at least one trajectory");
  const std::size_t steps = traces.front().size();
  if (steps <= static_cast<std::size_t>(delta)) throw ConfigError("time gap exceeds the trajectory");
  const std::size_t layers = traces.front().front().size();
  for (const auto& tr : traces) {
    if (tr.size() != steps) throw DimensionError("trajectories differ in length");
    for (const auto& step : tr) {
      if (step.size() != layers) throw DimensionError("trajectories differ in layer count");
    }
  }

  SimilarityReport rep;
  rep.delta = delta;
  rep.samples = traces.size();
  const std::size_t pairs = steps - delta;
  rep.mean.assign(layers, std::vector<double>(pairs, 0.0));
  rep.variance.assign(layers, std::vector<double>(pairs, 0.0));
  const double count = static_cast<double>(traces.size());
  for (std::size_t i = 0; i < layers; ++i) {
    for (std::size_t n = 0; n < pairs; ++n) {
      std::vector<double> k(traces.size());
      for (std::size_t s = 0; s < traces.size(); ++s) {
        const Tensor& a = traces[s][n][i];
        const Tensor& b = traces[s][n + delta][i];
        if (a.shape() != b.shape()) throw DimensionError("feature shapes differ between steps");
        double l1 = 0.0;
        for (std::size_t e = 0; e < a.numel(); ++e) l1 += std::abs(a[e] - b[e]);
        k[s] = l1 / delta;
      }
      double m = 0.0;
      for (double v : k) m += v / count;
      double var = 0.0;
      for (double v : k) var += (v - m) * (v - m) / count;
      rep.mean[i][n] = m;
      rep.variance[i][n] = var;
    }
  }
  return rep;
}

void write_similarity_csv(const std::filesystem::path& path, const SimilarityReport& report) {
  auto out = open_csv(path);
  out << "layer,iteration,mean,variance\n";
  for (std::size_t i = 0; i < report.mean.size(); ++i) {
    for (std::size_t n = 0; n < report.mean[i].size(); ++n) {
      out << i + 1 << ',' << n + 1 << ',' << report.mean[i][n] << ',' << report.variance[i][n] << '\n';
    }
  }
}

std::vector<double> RingSpectrum::ring_mean() const {
  std::vector<double> m(power_sum.size(), 0.0);
  for (std::size_t r = 0; r < m.size(); ++r) {
    if (count[r] > 0) m[r] = power_sum[r] / static_cast<double>(count[r]);
  }
  return m;
}

RingSpectrum ring_spectrum(const Tensor& image) {
  std::size_t c = 1, h = 0, w = 0;
  if (image.rank() == 2) {
    h = image.dim(0);
    w = image.dim(1);
  } else if (image.rank() == 3) {
    c = image.dim(0);
    h = image.dim(1);
    w = image.dim(2);
  } else {
    throw DimensionError("psd expects [h x w] or [c x h x w], got " + shape_string(image.shape()));
  }
  if (h != w) throw DimensionError("psd needs square images, got " + shape_string(image.shape()));

  const std::size_t n = h;
  const std::size_t rings = n / 2 + 1;
  RingSpectrum spec;
  spec.power_sum.assign(rings, 0.0);
  spec.count.assign(rings, 0);

  std::vector<std::size_t> ring_of(n * n);
  for (std::size_t ky = 0; ky < n; ++ky) {
    for (std::size_t kx = 0; kx < n; ++kx) {
      const double fy = ky < (n + 1) / 2 ? double(ky) : double(ky) - double(n);
      const double fx = kx < (n + 1) / 2 ? double(kx) : double(kx) - double(n);
      const auto r = static_cast<std::size_t>(std::floor(std::hypot(fy, fx)));
      ring_of[ky * n + kx] = std::min(r, rings - 1);
      ++spec.count[ring_of[ky * n + kx]];
    }
  }

  static std::mutex plan_mutex;
  fftw_complex* buf = fftw_alloc_complex(n * n);
  fftw_plan plan;
  {
    std::lock_guard lock(plan_mutex);
    plan = fftw_plan_dft_2d(static_cast<int>(n), static_cast<int>(n), buf, buf, FFTW_FORWARD,
                            FFTW_ESTIMATE);
  }
  const double norm = 1.0 / static_cast<double>(n * n);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t p = 0; p < n * n; ++p) {
      buf[p][0] = image[ch * n * n + p];
      buf[p][1] = 0.0;
    }
    fftw_execute(plan);
    for (std::size_t p = 0; p < n * n; ++p) {
      spec.power_sum[ring_of[p]] += (buf[p][0] * buf[p][0] + buf[p][1] * buf[p][1]) * norm;
    }
  }
  {
    std::lock_guard lock(plan_mutex);
    fftw_destroy_plan(plan);
  }
  fftw_free(buf);
  return spec;
}

PsdCurve psd(const std::vector<Tensor>& images) {
  if (images.empty()) throw ConfigError("psd needs at least one image");
  PsdCurve curve;
  curve.samples = images.size();
  const double count = static_cast<double>(images.size());
  for (const Tensor& img : images) {
    if (img.shape() != images.front().shape()) throw DimensionError("psd images differ in size");
    const std::vector<double> m = ring_spectrum(img).ring_mean();
    if (curve.log_power.empty()) {
      curve.log_power.assign(m.size(), 0.0);
      curve.mean_power.assign(m.size(), 0.0);
    }
    for (std::size_t r = 0; r < m.size(); ++r) {
      curve.log_power[r] += std::log10(m[r] + kPowerFloor) / count;
      curve.mean_power[r] += m[r] / count;
    }
  }
  return curve;
}

void write_psd_csv(const std::filesystem::path& path, const PsdCurve& curve) {
  auto out = open_csv(path);
  out << "ring,log_power\n";
  for (std::size_t r = 0; r < curve.rings(); ++r) out << r << ',' << curve.log_power[r] << '\n';
}

SpectralComparison compare_spectra(const ScoreNetwork& net, const NoiseSchedule& schedule,
                                   const SamplerConfig& config, int interval,
                                   const MixingSchedule& mixing, std::size_t samples,
                                   unsigned threads) {
  if (samples == 0) throw ConfigError("spectral comparison needs at least one sample");
  NoGradScope no_grad;
  const KeyframeSet keys = KeyframeSet::uniform(config.steps, interval);
  const MixingSchedule no_mixing{mixing.tau, mixing.bias, false};

  // Operation counts do not depend on the seed, so one probe fixes the
  // reduced step count.
  const Trajectory probe_full = sample(net, schedule, config);
  const Trajectory probe_fr = frdiff_sample(net, schedule, config, keys, no_mixing);
  const double per_step = static_cast<double>(probe_full.total_ops) / config.steps;
  SpectralComparison out;
  out.reduced_steps = std::clamp(
      static_cast<int>(std::lround(static_cast<double>(probe_fr.total_ops) / per_step)), 1,
      config.steps);

  std::vector<Tensor> base(samples), fr(samples), mix(samples), red(samples);
  std::vector<std::uint64_t> ops(4 * samples);
  parallel_for(samples, threads, [&](std::size_t j) {
    NoGradScope ng;
    SamplerConfig c = config;
    c.seed = config.seed + j;
    Trajectory a = sample(net, schedule, c);
    Trajectory b = frdiff_sample(net, schedule, c, keys, no_mixing);
    Trajectory m = frdiff_sample(net, schedule, c, keys, mixing);
    SamplerConfig rc = c;
    rc.steps = out.reduced_steps;
    Trajectory r = sample(net, schedule, rc);
    base[j] = a.final_sample;
    fr[j] = b.final_sample;
    mix[j] = m.final_sample;
    red[j] = r.final_sample;
    ops[4 * j] = a.total_ops;
    ops[4 * j + 1] = b.total_ops;
    ops[4 * j + 2] = m.total_ops;
    ops[4 * j + 3] = r.total_ops;
  });
  auto rings = [](const std::vector<Tensor>& imgs) {
    std::vector<std::vector<double>> r;
    for (const Tensor& im : imgs) r.push_back(ring_spectrum(im).ring_mean());
    return r;
  };
  out.baseline = psd(base);
  out.reuse = psd(fr);
  out.mixing = psd(mix);
  out.reduced = psd(red);
  out.baseline_rings = rings(base);
  out.reuse_rings = rings(fr);
  out.mixing_rings = rings(mix);
  out.reduced_rings = rings(red);
  out.baseline_ops = ops[0];
  out.reuse_ops = ops[1];
  out.mixing_ops = ops[2];
  out.reduced_ops = ops[3];
  return out;
}

double speedup_model(const CostModel& model) {
  if (model.blocks.empty()) throw ConfigError("cost model has no blocks");
  if (model.keyframes.size() == 0) throw ConfigError("cost model needs a keyframe");
  if (model.keyframes.steps() != model.steps) {
    throw ConfigError("cost model keyframes were built for a different step count");
  }
  double full = 0.0, rest = 0.0;
  for (const auto& b : model.blocks) {
    if (b.skippable < 0.0 || b.skippable > 1.0) {
      throw ConfigError("skippable fraction of " + b.name + " is outside [0, 1]");
    }
    full += b.cost;
    rest += (1.0 - b.skippable) * b.cost;
  }
  double denom = static_cast<double>(model.keyframes.size()) * full;
  for (int n = 1; n <= model.steps; ++n) {
    if (model.keyframes.contains(n)) continue;
    if (model.mixing && lambda_of(n, model.steps, *model.mixing) == 0.0) continue;
    denom += rest;
  }
  if (denom <= 0.0) throw ConfigError("cost model has zero total cost");
  return static_cast<double>(model.steps) * full / denom;
}

CostModel uniform_cost_model(double skippable, int steps, int interval) {
  CostModel m;
  m.blocks = {{"block", 1.0, skippable}};
  m.steps = steps;
  m.keyframes = KeyframeSet::uniform(steps, interval);
  return m;
}

std::vector<CostEntry> measured_cost_entries(const ScoreNetwork& net, double t, int label) {
  NoGradScope no_grad;
  Tensor x = initial_noise(net, 0);
  std::uint64_t overhead = 0;
  Conditioning cond;
  Tensor h;
  {
    OpCountScope s;
    cond = net.condition(t, label);
    h = net.embed(x);
    overhead += s.elapsed();
  }
  std::vector<CostEntry> entries;
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    const ResidualBlock& b = net.block(i);
    std::uint64_t prefix_ops = 0;
    {
      OpCountScope p;
      b.prefix(h, cond);
      prefix_ops = p.elapsed();
    }
    OpCountScope full;
    h = b.forward(h, cond);
    const std::uint64_t ops = full.elapsed();
    entries.push_back({"layer" + std::to_string(i + 1) + ":" + std::string(block_kind_name(b.kind())),
                       static_cast<double>(ops), static_cast<double>(prefix_ops) / ops});
  }
  {
    OpCountScope s;
    net.head(h, cond);
    overhead += s.elapsed();
  }
  entries.push_back({"overhead", static_cast<double>(overhead), 0.0});
  return entries;
}

std::vector<CostEntry> read_latency_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.rfind("name,cost,skippable", 0) != 0) {
    throw IoError(path.string() + ": expected header name,cost,skippable");
  }
  std::vector<CostEntry> out;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string name, cost, skip;
    if (!std::getline(ss, name, ',') || !std::getline(ss, cost, ',') || !std::getline(ss, skip)) {
      throw IoError(path.string() + ": malformed row " + std::to_string(row));
    }
    try {
      out.push_back({name, std::stod(cost), std::stod(skip)});
    } catch (const std::exception&) {
      throw IoError(path.string() + ": non-numeric value in row " + std::to_string(row));
    }
  }
  if (out.empty()) throw IoError(path.string() + ": no cost rows");
  return out;
}

namespace {

// Evaluates the score at window starts and repeats it inside the window.
class WindowReuse : public ScoreHook {
 public:
  WindowReuse(const SamplerConfig& config, int stride) : plain_(config), stride_(stride) {}
  Tensor score(const ScoreNetwork& net, const StepContext& ctx, const Tensor& x,
               StepRecord& record) override {
    record.keyframe = (ctx.iteration - 1) % stride_ == 0;
    if (record.keyframe) stored_ = plain_.score(net, ctx, x, record);
    return stored_;
  }

 private:
  FullScore plain_;
  int stride_;
  Tensor stored_;
};

}  // namespace

EquivalenceReport verify_nfe_equivalence(const ScoreNetwork& net, const NoiseSchedule& schedule,
                                         const SamplerConfig& config, int stride) {
  if (stride < 1) throw ConfigError("stride must be >= 1");
  if (config.solver != Solver::ddim) throw ConfigError("equivalence holds for the ddim solver only");
  NoGradScope no_grad;
  const std::vector<int> times = sampling_times(schedule.horizon(), config.steps);
  std::vector<int> reduced;
  for (std::size_t n = 0; n < times.size(); n += stride) reduced.push_back(times[n]);

  EquivalenceReport rep;
  rep.uneven = config.steps % stride != 0;
  rep.reduced_steps = static_cast<int>(reduced.size());
  SamplerConfig rc = config;
  rc.steps = rep.reduced_steps;
  const Tensor a = sample(net, schedule, rc, nullptr, reduced).final_sample;
  WindowReuse hook(config, stride);
  const Tensor b = sample(net, schedule, config, &hook).final_sample;
  rep.max_abs_dev = max_abs_diff(a, b);
  return rep;
}

}  // namespace frdiff
