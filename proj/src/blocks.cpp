// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "frdiff/blocks.hpp"

#include "frdiff/errors.hpp"
#include "frdiff/ops.hpp"

namespace frdiff {

std::string_view block_kind_name(BlockKind kind) {
  switch (kind) {
    case BlockKind::resnet: return "resnet";
    case BlockKind::spatial_transformer: return "spatial_transformer";
    case BlockKind::dit_attention: return "dit_attention";
    case BlockKind::dit_feedforward: return "dit_feedforward";
  }
  return "unknown";
}

BlockKind parse_block_kind(std::string_view name) {
  for (BlockKind k : {BlockKind::resnet, BlockKind::spatial_transformer, BlockKind::dit_attention,
                      BlockKind::dit_feedforward}) {
    if (block_kind_name(k) == name) return k;
  }
  throw ConfigError("unknown block kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// ResNetBlock

ResNetBlock::ResNetBlock(std::size_t channels, std::size_t groups, std::size_t time_dim,
                         Rng& rng)
    : groups_(groups),
      norm1_(nn::Affine::identity(channels)),
      conv1_(nn::Conv::init(channels, channels, 3, rng)),
      time_proj_(nn::Linear::init(time_dim, channels, rng)),
      norm2_(nn::Affine::identity(channels)),
      conv2_(nn::Conv::init(channels, channels, 3, rng, 0.5)) {}

Tensor ResNetBlock::prefix(const Tensor& x, const Conditioning&) const {
  Tensor h = ops::groupnorm(x, groups_, norm1_.gamma, norm1_.beta);
  return conv1_(ops::silu(h));
}

Tensor ResNetBlock::suffix(const Tensor& s, const Conditioning& cond) const {
  Tensor h = ops::add_channel_vector(s, time_proj_(cond.time_features));
  h = ops::groupnorm(h, groups_, norm2_.gamma, norm2_.beta);
  return conv2_(ops::silu(h));
}

Tensor ResNetBlock::forward(const Tensor& x, const Conditioning& cond) const {
  Tensor h = ops::groupnorm(x, groups_, norm1_.gamma, norm1_.beta);
  h = conv1_(ops::silu(h));
  h = ops::add_channel_vector(h, time_proj_(cond.time_features));
  h = ops::groupnorm(h, groups_, norm2_.gamma, norm2_.beta);
  h = conv2_(ops::silu(h));
  return ops::add(h, x);
}

void ResNetBlock::visit(const std::string& prefix, const nn::ParamVisitor& fn) {
  norm1_.visit(prefix + ".norm1", fn);
  conv1_.visit(prefix + ".conv1", fn);
  time_proj_.visit(prefix + ".time_proj", fn);
  norm2_.visit(prefix + ".norm2", fn);
  conv2_.visit(prefix + ".conv2", fn);
}

std::unique_ptr<ResidualBlock> ResNetBlock::clone() const {
  return std::make_unique<ResNetBlock>(*this);
}

// ---------------------------------------------------------------------------
// SpatialTransformerBlock

SpatialTransformerBlock::SpatialTransformerBlock(std::size_t channels, std::size_t groups,
                                                 std::size_t context_dim, Rng& rng)
    : groups_(groups),
      norm_in_(nn::Affine::identity(channels)),
      proj_in_(nn::Linear::init(channels, channels, rng)),
      ln1_(nn::Affine::identity(channels)),
      self_attn_(nn::Attention::init(channels, channels, rng)),
      ln2_(nn::Affine::identity(channels)),
      cross_attn_(nn::Attention::init(channels, context_dim, rng)),
      ln3_(nn::Affine::identity(channels)),
      ff_(nn::Mlp::init(channels, 2 * channels, rng)),
      proj_out_(nn::Linear::init(channels, channels, rng, 0.5)) {}

Tensor SpatialTransformerBlock::prefix(const Tensor& x, const Conditioning& cond) const {
  Tensor h = ops::groupnorm(x, groups_, norm_in_.gamma, norm_in_.beta);
  Tensor x1 = proj_in_(ops::to_tokens(h));
  Tensor x2 = ops::add(nn::self_attention(ops::layernorm(x1, ln1_.gamma, ln1_.beta), self_attn_), x1);
  Tensor x3 = ops::add(
      nn::cross_attention(ops::layernorm(x2, ln2_.gamma, ln2_.beta), cond.context, cross_attn_), x2);
  Tensor x4 = ops::add(nn::mlp(ops::layernorm(x3, ln3_.gamma, ln3_.beta), ff_), x3);
  return ops::from_tokens(proj_out_(x4), x.dim(1), x.dim(2));
}

Tensor SpatialTransformerBlock::suffix(const Tensor& s, const Conditioning&) const { return s; }

Tensor SpatialTransformerBlock::forward(const Tensor& x, const Conditioning& cond) const {
  Tensor h = ops::groupnorm(x, groups_, norm_in_.gamma, norm_in_.beta);
  Tensor x1 = proj_in_(ops::to_tokens(h));
  Tensor x2 = ops::add(nn::self_attention(ops::layernorm(x1, ln1_.gamma, ln1_.beta), self_attn_), x1);
  Tensor x3 = ops::add(
      nn::cross_attention(ops::layernorm(x2, ln2_.gamma, ln2_.beta), cond.context, cross_attn_), x2);
  Tensor x4 = ops::add(nn::mlp(ops::layernorm(x3, ln3_.gamma, ln3_.beta), ff_), x3);
  return ops::add(ops::from_tokens(proj_out_(x4), x.dim(1), x.dim(2)), x);
}

void SpatialTransformerBlock::visit(const std::string& prefix, const nn::ParamVisitor& fn) {
  norm_in_.visit(prefix + ".norm_in", fn);
  proj_in_.visit(prefix + ".proj_in", fn);
  ln1_.visit(prefix + ".ln1", fn);
  self_attn_.visit(prefix + ".self_attn", fn);
  ln2_.visit(prefix + ".ln2", fn);
  cross_attn_.visit(prefix + ".cross_attn", fn);
  ln3_.visit(prefix + ".ln3", fn);
  ff_.visit(prefix + ".ff", fn);
  proj_out_.visit(prefix + ".proj_out", fn);
}

std::unique_ptr<ResidualBlock> SpatialTransformerBlock::clone() const {
  return std::make_unique<SpatialTransformerBlock>(*this);
}

// ---------------------------------------------------------------------------
// DiTBlock

DiTBlock::DiTBlock(BlockKind kind, std::size_t dim, std::size_t time_dim, Rng& rng)
    : kind_(kind),
      dim_(dim),
      shift_scale_(nn::Linear::init(time_dim, 2 * dim, rng, 0.5)),
      gate_(nn::Linear::init(time_dim, dim, rng, 0.5)) {
  if (kind == BlockKind::dit_attention) {
    attn_ = nn::Attention::init(dim, dim, rng);
  } else if (kind == BlockKind::dit_feedforward) {
    ff_ = nn::Mlp::init(dim, 4 * dim, rng);
  } else {
    throw ConfigError("DiTBlock needs dit_attention or dit_feedforward");
  }
}

Tensor DiTBlock::mixer(const Tensor& h) const {
  return kind_ == BlockKind::dit_attention ? nn::self_attention(h, attn_) : nn::mlp(h, ff_);
}

Tensor DiTBlock::prefix(const Tensor& x, const Conditioning& cond) const {
  Tensor mod = shift_scale_(cond.time_features);
  Tensor shift = ops::slice(mod, 0, dim_);
  Tensor scale = ops::add_scalar(ops::slice(mod, dim_, dim_), 1.0);
  Tensor h = ops::layernorm(x, Tensor(), Tensor());
  h = ops::add_row_vector(ops::mul_row_vector(h, scale), shift);
  return mixer(h);
}

Tensor DiTBlock::suffix(const Tensor& s, const Conditioning& cond) const {
  return ops::mul_row_vector(s, gate_(cond.time_features));
}

Tensor DiTBlock::forward(const Tensor& x, const Conditioning& cond) const {
  Tensor mod = shift_scale_(cond.time_features);
  Tensor shift = ops::slice(mod, 0, dim_);
  Tensor scale = ops::add_scalar(ops::slice(mod, dim_, dim_), 1.0);
  Tensor h = ops::layernorm(x, Tensor(), Tensor());
  h = ops::add_row_vector(ops::mul_row_vector(h, scale), shift);
  h = mixer(h);
  return ops::add(ops::mul_row_vector(h, gate_(cond.time_features)), x);
}

void DiTBlock::visit(const std::string& prefix, const nn::ParamVisitor& fn) {
  shift_scale_.visit(prefix + ".shift_scale", fn);
  gate_.visit(prefix + ".gate", fn);
  if (kind_ == BlockKind::dit_attention) {
    attn_.visit(prefix + ".attn", fn);
  } else {
    ff_.visit(prefix + ".ff", fn);
  }
}

std::unique_ptr<ResidualBlock> DiTBlock::clone() const { return std::make_unique<DiTBlock>(*this); }

void DiTBlock::zero_gate() { gate_ = nn::Linear::zeros(gate_.weight.dim(0), dim_); }

}  // namespace frdiff
