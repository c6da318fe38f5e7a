// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "frdiff/blocks.hpp"
#include "frdiff/nn.hpp"

namespace frdiff {

enum class Arch { toy_unet, toy_dit };

std::string_view arch_name(Arch arch);
Arch parse_arch(std::string_view name);

struct ModelConfig {
  Arch arch = Arch::toy_unet;
  std::size_t width = 32;
  // toy_unet: number of residual blocks, alternating ResNet / SpatialTransformer.
  // toy_dit: number of DiT blocks, each an attention + feed-forward pair.
  std::size_t depth = 4;
  std::uint64_t seed = 0;
  std::size_t channels = 1;
  std::size_t height = 8;
  std::size_t image_width = 8;
  std::size_t groups = 8;
  std::size_t time_dim = 64;
  std::size_t num_classes = 2;
  std::size_t context_tokens = 2;
  std::size_t patch = 2;
};

// Dispatch point for residual blocks during a forward pass; feature reuse and
// instrumentation attach here.
class BlockExecutor {
 public:
  virtual ~BlockExecutor() = default;
  virtual Tensor run(std::size_t layer, const ResidualBlock& block, const Tensor& x,
                     const Conditioning& cond) = 0;
};

inline constexpr int kUnconditional = -1;

/// Noise-prediction network eps(x_t, t, c) built from residual blocks.
///
/// Layers are indexed 0..layer_count()-1 in execution order.
class ScoreNetwork {
 public:
  explicit ScoreNetwork(const ModelConfig& config);
  ScoreNetwork(const ScoreNetwork& other);
  ScoreNetwork& operator=(const ScoreNetwork& other);
  ScoreNetwork(ScoreNetwork&&) noexcept = default;
  ScoreNetwork& operator=(ScoreNetwork&&) noexcept = default;

  const ModelConfig& config() const { return config_; }
  Shape sample_shape() const;
  std::size_t layer_count() const { return blocks_.size(); }
  const ResidualBlock& block(std::size_t layer) const { return *blocks_.at(layer); }
  ResidualBlock& block(std::size_t layer) { return *blocks_.at(layer); }

  // label == kUnconditional selects the null class.
  Conditioning condition(double t, int label) const;
  Tensor embed(const Tensor& x) const;
  Tensor head(const Tensor& h, const Conditioning& cond) const;

  // exec == nullptr runs every block's unsplit forward().
  Tensor forward(const Tensor& x, double t, int label, BlockExecutor* exec = nullptr) const;

  void visit_params(const nn::ParamVisitor& fn);
  std::vector<std::pair<std::string, Tensor*>> parameters();
  std::size_t parameter_count();

 private:
  std::size_t label_row(int label) const;

  ModelConfig config_;
  nn::Linear time_fc1_;
  nn::Linear time_fc2_;
  Tensor class_table_;  // [(num_classes + 1) x embed]; last row is the null class
  std::vector<std::unique_ptr<ResidualBlock>> blocks_;

  // toy_unet
  nn::Conv conv_in_;
  nn::Affine norm_out_;
  nn::Conv conv_out_;

  // toy_dit
  nn::Linear patch_embed_;
  Tensor pos_embed_;  // fixed, not trained
  nn::Linear final_mod_;
  nn::Linear final_proj_;
};

ScoreNetwork build_toy_network(Arch arch, std::size_t width, std::size_t depth,
                               std::uint64_t seed);

// 64-dim sinusoidal embedding of a (possibly fractional) diffusion time.
Tensor timestep_embedding(double t, std::size_t dim = 64);

void save_checkpoint(ScoreNetwork& net, const std::filesystem::path& dir);
ScoreNetwork load_checkpoint(const std::filesystem::path& dir);

}  // namespace frdiff
