// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "frdiff/reuse.hpp"

namespace frdiff {

// ---------------------------------------------------------------------------
// Temporal change of block outputs

// features[n - 1][i] is the output of layer i at iteration n.
using FeatureTrace = std::vector<std::vector<Tensor>>;

// Full-computation sampling that also records every block output of the
// first (conditional) branch.
class FeatureRecorder : public ScoreHook {
 public:
  explicit FeatureRecorder(const SamplerConfig& config) : config_(config) {}
  Tensor score(const ScoreNetwork& net, const StepContext& ctx, const Tensor& x,
               StepRecord& record) override;
  const FeatureTrace& trace() const { return trace_; }

 private:
  SamplerConfig config_;
  FeatureTrace trace_;
};

FeatureTrace record_features(const ScoreNetwork& net, const NoiseSchedule& schedule,
                             const SamplerConfig& config);

struct SimilarityReport {
  int delta = 1;
  std::size_t samples = 0;
  // [layer][n - 1] for n = 1..N - delta: mean and variance over trajectories
  // of ||F_i(n) - F_i(n + delta)||_1 / delta (total L1 over the feature map).
  std::vector<std::vector<double>> mean;
  std::vector<std::vector<double>> variance;
};

// delta is measured in sampling iterations.
SimilarityReport temporal_change(const std::vector<FeatureTrace>& traces, int delta);
void write_similarity_csv(const std::filesystem::path& path, const SimilarityReport& report);

// ---------------------------------------------------------------------------
// Radially averaged power spectrum

// Power |DFT|^2 / (h w) summed per integer ring floor(|k|), with frequencies
// centred on zero and radii above Nyquist folded into the Nyquist ring, so the
// ring sums add up to the squared norm of the image. Accepts [h x w] or
// [c x h x w] (channels summed) with h == w.
struct RingSpectrum {
  std::vector<double> power_sum;
  std::vector<std::size_t> count;
  std::vector<double> ring_mean() const;
};

RingSpectrum ring_spectrum(const Tensor& image);

inline constexpr double kPowerFloor = 1e-30;

struct PsdCurve {
  std::vector<double> log_power;   // batch mean of log10(ring mean + floor)
  std::vector<double> mean_power;  // batch mean of ring mean
  std::size_t samples = 0;
  std::size_t rings() const { return log_power.size(); }
};

PsdCurve psd(const std::vector<Tensor>& images);
void write_psd_csv(const std::filesystem::path& path, const PsdCurve& curve);

// Spectra of matched-seed samples from four samplers: full computation,
// feature reuse with uniform interval M (no mixing), the same keyframes with
// score mixing, and plain DDIM whose step count matches the operation count
// of the feature-reuse run.
struct SpectralComparison {
  PsdCurve baseline, reuse, mixing, reduced;
  // [sample][ring] ring means, same seed order for every sampler.
  std::vector<std::vector<double>> baseline_rings, reuse_rings, mixing_rings, reduced_rings;
  int reduced_steps = 0;
  std::uint64_t baseline_ops = 0, reuse_ops = 0, mixing_ops = 0, reduced_ops = 0;
};

SpectralComparison compare_spectra(const ScoreNetwork& net, const NoiseSchedule& schedule,
                                   const SamplerConfig& config, int interval,
                                   const MixingSchedule& mixing, std::size_t samples,
                                   unsigned threads = 1);

// ---------------------------------------------------------------------------
// Cost model

struct CostEntry {
  std::string name;
  double cost = 0.0;
  double skippable = 0.0;  // fraction of `cost` removed by reuse, in [0, 1]
};

struct CostModel {
  std::vector<CostEntry> blocks;
  int steps = 1;
  KeyframeSet keyframes = KeyframeSet::all(1);
  // When set, non-keyframes with lambda = 0 cost nothing.
  std::optional<MixingSchedule> mixing;
};

// N * C_full / (|K| * C_full + sum over non-keyframes of C_non_skippable).
double speedup_model(const CostModel& model);
CostModel uniform_cost_model(double skippable, int steps, int interval);

// Per-block operation counts of one evaluation at (t, label); the skippable
// part is the prefix. A final `overhead` entry covers embedding, conditioning
// and the output head with skippable = 0.
std::vector<CostEntry> measured_cost_entries(const ScoreNetwork& net, double t = 500.0,
                                             int label = 0);

// CSV with header name,cost,skippable.
std::vector<CostEntry> read_latency_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Reduced-NFE equivalence

struct EquivalenceReport {
  double max_abs_dev = 0.0;
  bool uneven = false;  // stride does not divide N; the last window is shorter
  int reduced_steps = 0;
};

// (a) DDIM over the window-start times only, (b) N-step DDIM that evaluates
// the score at each window start and reuses it for the rest of the window.
EquivalenceReport verify_nfe_equivalence(const ScoreNetwork& net, const NoiseSchedule& schedule,
                                         const SamplerConfig& config, int stride);

}  // namespace frdiff
