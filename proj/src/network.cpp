// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "frdiff/network.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>

#include "frdiff/errors.hpp"
#include "frdiff/ops.hpp"
#include "frdiff/tensor_io.hpp"

namespace frdiff {

namespace fs = std::filesystem;

std::string_view arch_name(Arch arch) {
  return arch == Arch::toy_unet ? "toy_unet" : "toy_dit";
}

Arch parse_arch(std::string_view name) {
  if (name == "toy_unet") return Arch::toy_unet;
  if (name == "toy_dit") return Arch::toy_dit;
  throw ConfigError("unknown architecture '" + std::string(name) + "'");
}

Tensor timestep_embedding(double t, std::size_t dim) {
  const std::size_t half = dim / 2;
  std::vector<double> v(dim, 0.0);
  for (std::size_t k = 0; k < half; ++k) {
    const double freq = std::exp(-std::log(10000.0) * static_cast<double>(k) / half);
    v[k] = std::sin(t * freq);
    v[half + k] = std::cos(t * freq);
  }
  return Tensor({dim}, std::move(v));
}

namespace {

constexpr std::size_t kTimeEmbedDim = 64;

void validate(const ModelConfig& c) {
  auto fail = [](const std::string& m) { throw ConfigError("model: " + m); };
  if (c.width == 0 || c.depth == 0) fail("width and depth must be positive");
  if (c.channels == 0 || c.height == 0 || c.image_width == 0) fail("image extents must be positive");
  if (c.time_dim == 0 || c.num_classes == 0) fail("time_dim and num_classes must be positive");
  if (c.arch == Arch::toy_unet) {
    if (c.groups == 0 || c.width % c.groups != 0) fail("width must be divisible by groups");
    if (c.context_tokens == 0) fail("context_tokens must be positive");
  } else {
    if (c.patch == 0 || c.height % c.patch != 0 || c.image_width % c.patch != 0) {
      fail("image extents must be divisible by the patch size");
    }
  }
}

// Fixed 2-D sinusoidal position table, [tokens x dim].
Tensor position_table(std::size_t rows, std::size_t cols, std::size_t dim) {
  std::vector<double> v(rows * cols * dim, 0.0);
  const std::size_t quarter = std::max<std::size_t>(dim / 4, 1);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      double* row = v.data() + (r * cols + c) * dim;
      for (std::size_t k = 0; k < quarter && 4 * k + 3 < dim; ++k) {
        const double freq = std::exp(-std::log(10000.0) * static_cast<double>(k) / quarter);
        row[4 * k] = std::sin(r * freq);
        row[4 * k + 1] = std::cos(r * freq);
        row[4 * k + 2] = std::sin(c * freq);
        row[4 * k + 3] = std::cos(c * freq);
      }
    }
  }
  return Tensor({rows * cols, dim}, std::move(v));
}

}  // namespace

ScoreNetwork::ScoreNetwork(const ModelConfig& config) : config_(config) {
  validate(config_);
  Rng rng(config_.seed);
  const std::size_t w = config_.width;
  time_fc1_ = nn::Linear::init(kTimeEmbedDim, config_.time_dim, rng);
  time_fc2_ = nn::Linear::init(config_.time_dim, config_.time_dim, rng);

  if (config_.arch == Arch::toy_unet) {
    class_table_ = normal_tensor({config_.num_classes + 1, config_.context_tokens * w}, rng);
    conv_in_ = nn::Conv::init(config_.channels, w, 3, rng);
    for (std::size_t i = 0; i < config_.depth; ++i) {
      if (i % 2 == 0) {
        blocks_.push_back(std::make_unique<ResNetBlock>(w, config_.groups, config_.time_dim, rng));
      } else {
        blocks_.push_back(std::make_unique<SpatialTransformerBlock>(w, config_.groups, w, rng));
      }
    }
    norm_out_ = nn::Affine::identity(w);
    conv_out_ = nn::Conv::init(w, config_.channels, 3, rng);
  } else {
    const std::size_t p = config_.patch;
    const std::size_t rows = config_.height / p, cols = config_.image_width / p;
    class_table_ = normal_tensor({config_.num_classes + 1, config_.time_dim}, rng);
    patch_embed_ = nn::Linear::init(config_.channels * p * p, w, rng);
    pos_embed_ = position_table(rows, cols, w);
    for (std::size_t i = 0; i < config_.depth; ++i) {
      blocks_.push_back(std::make_unique<DiTBlock>(BlockKind::dit_attention, w, config_.time_dim, rng));
      blocks_.push_back(
          std::make_unique<DiTBlock>(BlockKind::dit_feedforward, w, config_.time_dim, rng));
    }
    final_mod_ = nn::Linear::init(config_.time_dim, 2 * w, rng, 0.5);
    final_proj_ = nn::Linear::init(w, config_.channels * p * p, rng);
  }
}

ScoreNetwork::ScoreNetwork(const ScoreNetwork& other)
    : config_(other.config_),
      time_fc1_(other.time_fc1_),
      time_fc2_(other.time_fc2_),
      class_table_(other.class_table_),
      conv_in_(other.conv_in_),
      norm_out_(other.norm_out_),
      conv_out_(other.conv_out_),
      patch_embed_(other.patch_embed_),
      pos_embed_(other.pos_embed_),
      final_mod_(other.final_mod_),
      final_proj_(other.final_proj_) {
  for (const auto& b : other.blocks_) blocks_.push_back(b->clone());
}

ScoreNetwork& ScoreNetwork::operator=(const ScoreNetwork& other) {
  if (this != &other) *this = ScoreNetwork(other);
  return *this;
}

Shape ScoreNetwork::sample_shape() const {
  return {config_.channels, config_.height, config_.image_width};
}

std::size_t ScoreNetwork::label_row(int label) const {
  if (label == kUnconditional) return config_.num_classes;
  if (label < 0 || static_cast<std::size_t>(label) >= config_.num_classes) {
    throw ConfigError("class label " + std::to_string(label) + " out of range");
  }
  return static_cast<std::size_t>(label);
}

Conditioning ScoreNetwork::condition(double t, int label) const {
  Tensor temb = time_fc2_(ops::silu(time_fc1_(timestep_embedding(t, kTimeEmbedDim))));
  const std::size_t row = label_row(label);
  const std::size_t row_len = class_table_.dim(1);
  Tensor class_row = ops::slice(class_table_, row * row_len, row_len);
  Conditioning cond;
  if (config_.arch == Arch::toy_unet) {
    cond.time_features = ops::silu(temb);
    cond.context = ops::reshape(class_row, {config_.context_tokens, config_.width});
  } else {
    cond.time_features = ops::silu(ops::add(temb, class_row));
  }
  return cond;
}

Tensor ScoreNetwork::embed(const Tensor& x) const {
  if (x.shape() != sample_shape()) {
    throw DimensionError("network input " + shape_string(x.shape()) + " does not match " +
                         shape_string(sample_shape()));
  }
  if (config_.arch == Arch::toy_unet) return conv_in_(x);

  const std::size_t p = config_.patch, c = config_.channels;
  const std::size_t h = config_.height, w = config_.image_width;
  const std::size_t rows = h / p, cols = w / p, feat = c * p * p;
  std::vector<std::size_t> idx(rows * cols * feat);
  for (std::size_t py = 0; py < rows; ++py) {
    for (std::size_t px = 0; px < cols; ++px) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t dy = 0; dy < p; ++dy) {
          for (std::size_t dx = 0; dx < p; ++dx) {
            const std::size_t token = py * cols + px;
            const std::size_t f = (ch * p + dy) * p + dx;
            idx[token * feat + f] = (ch * h + py * p + dy) * w + px * p + dx;
          }
        }
      }
    }
  }
  Tensor patches = ops::gather(x, {rows * cols, feat}, std::move(idx));
  return ops::add(patch_embed_(patches), pos_embed_);
}

Tensor ScoreNetwork::head(const Tensor& h, const Conditioning& cond) const {
  if (config_.arch == Arch::toy_unet) {
    Tensor y = ops::groupnorm(h, config_.groups, norm_out_.gamma, norm_out_.beta);
    return conv_out_(ops::silu(y));
  }
  const std::size_t w = config_.width;
  Tensor mod = final_mod_(cond.time_features);
  Tensor shift = ops::slice(mod, 0, w);
  Tensor scale = ops::add_scalar(ops::slice(mod, w, w), 1.0);
  Tensor y = ops::layernorm(h, Tensor(), Tensor());
  y = final_proj_(ops::add_row_vector(ops::mul_row_vector(y, scale), shift));

  const std::size_t p = config_.patch, c = config_.channels;
  const std::size_t hh = config_.height, ww = config_.image_width;
  const std::size_t cols = ww / p, feat = c * p * p;
  std::vector<std::size_t> idx(c * hh * ww);
  for (std::size_t ch = 0; ch < c; ++ch) {
    for (std::size_t yy = 0; yy < hh; ++yy) {
      for (std::size_t xx = 0; xx < ww; ++xx) {
        const std::size_t token = (yy / p) * cols + xx / p;
        const std::size_t f = (ch * p + yy % p) * p + xx % p;
        idx[(ch * hh + yy) * ww + xx] = token * feat + f;
      }
    }
  }
  return ops::gather(y, sample_shape(), std::move(idx));
}

Tensor ScoreNetwork::forward(const Tensor& x, double t, int label, BlockExecutor* exec) const {
  Conditioning cond = condition(t, label);
  Tensor h = embed(x);
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    h = exec != nullptr ? exec->run(i, *blocks_[i], h, cond) : blocks_[i]->forward(h, cond);
  }
  return head(h, cond);
}

void ScoreNetwork::visit_params(const nn::ParamVisitor& fn) {
  time_fc1_.visit("time.fc1", fn);
  time_fc2_.visit("time.fc2", fn);
  fn("class_table", class_table_);
  if (config_.arch == Arch::toy_unet) conv_in_.visit("conv_in", fn);
  if (config_.arch == Arch::toy_dit) patch_embed_.visit("patch_embed", fn);
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    blocks_[i]->visit("blocks." + std::to_string(i), fn);
  }
  if (config_.arch == Arch::toy_unet) {
    norm_out_.visit("norm_out", fn);
    conv_out_.visit("conv_out", fn);
  } else {
    final_mod_.visit("final_mod", fn);
    final_proj_.visit("final_proj", fn);
  }
}

std::vector<std::pair<std::string, Tensor*>> ScoreNetwork::parameters() {
  std::vector<std::pair<std::string, Tensor*>> out;
  visit_params([&out](const std::string& name, Tensor& p) { out.emplace_back(name, &p); });
  return out;
}

std::size_t ScoreNetwork::parameter_count() {
  std::size_t n = 0;
  visit_params([&n](const std::string&, Tensor& p) { n += p.numel(); });
  return n;
}

ScoreNetwork build_toy_network(Arch arch, std::size_t width, std::size_t depth,
                               std::uint64_t seed) {
  ModelConfig c;
  c.arch = arch;
  c.width = width;
  c.depth = depth;
  c.seed = seed;
  c.groups = std::min<std::size_t>(8, width);
  return ScoreNetwork(c);
}

namespace {

nlohmann::ordered_json model_to_json(const ModelConfig& c) {
  return {{"arch", arch_name(c.arch)},     {"width", c.width},
          {"depth", c.depth},              {"seed", c.seed},
          {"channels", c.channels},        {"height", c.height},
          {"image_width", c.image_width},  {"groups", c.groups},
          {"time_dim", c.time_dim},        {"num_classes", c.num_classes},
          {"context_tokens", c.context_tokens}, {"patch", c.patch}};
}

ModelConfig model_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.arch = parse_arch(j.at("arch").get<std::string>());
  c.width = j.at("width");
  c.depth = j.at("depth");
  c.seed = j.at("seed");
  c.channels = j.at("channels");
  c.height = j.at("height");
  c.image_width = j.at("image_width");
  c.groups = j.at("groups");
  c.time_dim = j.at("time_dim");
  c.num_classes = j.at("num_classes");
  c.context_tokens = j.at("context_tokens");
  c.patch = j.at("patch");
  return c;
}

}  // namespace

void save_checkpoint(ScoreNetwork& net, const fs::path& dir) {
  fs::create_directories(dir);
  nlohmann::ordered_json manifest;
  manifest["format"] = "frdiff-checkpoint-1";
  manifest["model"] = model_to_json(net.config());
  std::vector<std::string> names;
  net.visit_params([&](const std::string& name, Tensor& p) {
    write_tensor(dir, name, p);
    names.push_back(name);
  });
  manifest["tensors"] = names;
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

ScoreNetwork load_checkpoint(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw IoError("no checkpoint manifest in " + dir.string());
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad checkpoint manifest: " + std::string(e.what()));
  }
  ScoreNetwork net(model_from_json(manifest.at("model")));
  net.visit_params([&](const std::string& name, Tensor& p) {
    Tensor loaded = read_tensor(dir, name);
    if (loaded.shape() != p.shape()) {
      throw IoError("checkpoint tensor " + name + " has shape " + shape_string(loaded.shape()) +
                    ", expected " + shape_string(p.shape()));
    }
    p = loaded;
  });
  return net;
}

}  // namespace frdiff
