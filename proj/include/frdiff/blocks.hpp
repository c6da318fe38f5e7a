// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "frdiff/nn.hpp"
#include "frdiff/tensor.hpp"

namespace frdiff {

enum class BlockKind { resnet, spatial_transformer, dit_attention, dit_feedforward };

std::string_view block_kind_name(BlockKind kind);
BlockKind parse_block_kind(std::string_view name);

// Per-evaluation conditioning shared by every block of a network.
struct Conditioning {
  Tensor time_features;  // [time_dim], already passed through SiLU
  Tensor context;        // [tokens x context_dim]; used by cross-attention
};

/// A residual block y = F(x, t) + x with F factored as f(S(x), t).
///
/// prefix() is S, the part that may be cached and reused across sampling
/// iterations. suffix() is f, which is always re-evaluated with the current
/// conditioning. forward() is the unsplit computation; for every input,
/// add(suffix(prefix(x)), x) is bit-identical to forward(x).
class ResidualBlock {
 public:
  virtual ~ResidualBlock() = default;

  virtual BlockKind kind() const = 0;
  virtual Tensor prefix(const Tensor& x, const Conditioning& cond) const = 0;
  virtual Tensor suffix(const Tensor& s, const Conditioning& cond) const = 0;
  virtual Tensor forward(const Tensor& x, const Conditioning& cond) const = 0;

  virtual void visit(const std::string& prefix, const nn::ParamVisitor& fn) = 0;
  virtual std::unique_ptr<ResidualBlock> clone() const = 0;
};

// x [c x h x w]. S = GroupNorm -> SiLU -> Conv. f adds the projected time
// embedding, then GroupNorm -> SiLU -> Conv.
class ResNetBlock final : public ResidualBlock {
 public:
  ResNetBlock(std::size_t channels, std::size_t groups, std::size_t time_dim, Rng& rng);

  BlockKind kind() const override { return BlockKind::resnet; }
  Tensor prefix(const Tensor& x, const Conditioning& cond) const override;
  Tensor suffix(const Tensor& s, const Conditioning& cond) const override;
  Tensor forward(const Tensor& x, const Conditioning& cond) const override;
  void visit(const std::string& prefix, const nn::ParamVisitor& fn) override;
  std::unique_ptr<ResidualBlock> clone() const override;

 private:
  std::size_t groups_;
  nn::Affine norm1_;
  nn::Conv conv1_;
  nn::Linear time_proj_;
  nn::Affine norm2_;
  nn::Conv conv2_;
};

// x [c x h x w]. Takes no time input, so S is everything before the final
// skip connection and f is the identity.
class SpatialTransformerBlock final : public ResidualBlock {
 public:
  SpatialTransformerBlock(std::size_t channels, std::size_t groups, std::size_t context_dim,
                          Rng& rng);

  BlockKind kind() const override { return BlockKind::spatial_transformer; }
  Tensor prefix(const Tensor& x, const Conditioning& cond) const override;
  Tensor suffix(const Tensor& s, const Conditioning& cond) const override;
  Tensor forward(const Tensor& x, const Conditioning& cond) const override;
  void visit(const std::string& prefix, const nn::ParamVisitor& fn) override;
  std::unique_ptr<ResidualBlock> clone() const override;

 private:
  std::size_t groups_;
  nn::Affine norm_in_;
  nn::Linear proj_in_;
  nn::Affine ln1_;
  nn::Attention self_attn_;
  nn::Affine ln2_;
  nn::Attention cross_attn_;
  nn::Affine ln3_;
  nn::Mlp ff_;
  nn::Linear proj_out_;
};

// adaLN residual block of a diffusion transformer, x [tokens x dim].
// S = LayerNorm -> (1 + gamma(t)) * x + beta(t) -> mixer; f = alpha(t) * S.
// Only alpha is recomputed when S is reused.
class DiTBlock final : public ResidualBlock {
 public:
  DiTBlock(BlockKind kind, std::size_t dim, std::size_t time_dim, Rng& rng);

  BlockKind kind() const override { return kind_; }
  Tensor prefix(const Tensor& x, const Conditioning& cond) const override;
  Tensor suffix(const Tensor& s, const Conditioning& cond) const override;
  Tensor forward(const Tensor& x, const Conditioning& cond) const override;
  void visit(const std::string& prefix, const nn::ParamVisitor& fn) override;
  std::unique_ptr<ResidualBlock> clone() const override;

  // Zeroes the alpha projection so the block reduces to the identity.
  void zero_gate();

 private:
  Tensor mixer(const Tensor& h) const;

  BlockKind kind_;
  std::size_t dim_;
  nn::Linear shift_scale_;  // time_dim -> 2 * dim
  nn::Linear gate_;         // time_dim -> dim
  nn::Attention attn_;      // used by dit_attention
  nn::Mlp ff_;              // used by dit_feedforward
};

}  // namespace frdiff
