// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "frdiff/config.hpp"

#include <cstdlib>
#include <fstream>

#include "frdiff/errors.hpp"

namespace frdiff {

using nlohmann::json;
using nlohmann::ordered_json;

const ordered_json& RunConfig::defaults() {
  static const ordered_json d = ordered_json::parse(R"({
    "model": {"arch": "toy_unet", "width": 32, "depth": 4, "seed": 0},
    "schedule": {"T": 1000, "beta_start": 0.0001, "beta_end": 0.02},
    "sampler": {"N": 50, "solver": "ddim", "guidance_weight": 1.0, "seed": 0,
                "class_label": 0, "samples": 1},
    "fr": {"interval": 1, "keyframes": [], "tau": 30.0, "bias": 0.5, "mixing": true,
           "reuse_scope": ["all"]},
    "train": {"corpus": "shapes", "corpus_size": 512, "corpus_seed": 0, "steps": 2000,
              "lr": 0.002, "batch": 8, "seed": 0, "cond_drop": 0.1},
    "autofr": {"cost_lambda": 0.001, "lr": 0.05, "beta1": 0.9, "beta2": 0.999, "iters": 100,
               "batch": 4, "seed": 0, "theta_init": 0.5},
    "analysis": {"trajectories": 8, "delta": 1, "psd_samples": 256, "skippable": -1.0,
                 "latency_csv": ""},
    "verify": {"stride": 2, "weights": "random"},
    "io": {"out_dir": "runs", "checkpoint": "", "run_name": ""},
    "threads": 1
  })");
  return d;
}

namespace {

bool same_kind(const json& expected, const json& actual) {
  if (expected.is_number_float()) return actual.is_number();
  if (expected.is_number_integer()) return actual.is_number_integer();
  if (expected.is_boolean()) return actual.is_boolean();
  if (expected.is_string()) return actual.is_string();
  if (expected.is_array()) return actual.is_array();
  if (expected.is_object()) return actual.is_object();
  return false;
}

std::string kind_name(const json& v) {
  if (v.is_number_integer()) return "integer";
  if (v.is_number()) return "number";
  return v.type_name();
}

void merge_into(ordered_json& target, const json& src, const std::string& path) {
  if (!src.is_object()) throw ConfigError("config" + (path.empty() ? "" : " key " + path) + " must be an object");
  for (const auto& [key, value] : src.items()) {
    const std::string full = path.empty() ? key : path + "." + key;
    if (!target.contains(key)) throw ConfigError("unknown config key '" + full + "'");
    ordered_json& slot = target[key];
    if (!same_kind(slot, value)) {
      throw ConfigError("config key '" + full + "' expects " + kind_name(slot) + ", got " + kind_name(value));
    }
    if (slot.is_object()) {
      merge_into(slot, value, full);
    } else if (slot.is_number_float()) {
      slot = value.get<double>();
    } else {
      slot = value;
    }
  }
}

std::vector<std::string> split_key(std::string_view key) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    parts.emplace_back(key.substr(start, dot == std::string_view::npos ? key.size() - start : dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return parts;
}

template <class T>
T get(const ordered_json& tree, const char* section, const char* key) {
  return tree.at(section).at(key).get<T>();
}

int positive_int(const ordered_json& tree, const char* section, const char* key) {
  const long long v = get<long long>(tree, section, key);
  if (v < 1) throw ConfigError(std::string(section) + "." + key + " must be >= 1");
  return static_cast<int>(v);
}

std::uint64_t seed_of(const ordered_json& tree, const char* section) {
  const long long v = get<long long>(tree, section, "seed");
  if (v < 0) throw ConfigError(std::string(section) + ".seed must be >= 0");
  return static_cast<std::uint64_t>(v);
}

}  // namespace

RunConfig::RunConfig() : tree_(defaults()) {
  if (const char* out = std::getenv("FRDIFF_OUT"); out != nullptr && *out != '\0') {
    tree_["io"]["out_dir"] = out;
  }
}

void RunConfig::merge(const json& overrides) { merge_into(tree_, overrides, ""); }

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  merge(j);
  if (const char* out = std::getenv("FRDIFF_OUT"); out != nullptr && *out != '\0') {
    tree_["io"]["out_dir"] = out;
  }
}

void RunConfig::set_json(std::string_view dotted_key, const json& value) {
  const auto parts = split_key(dotted_key);
  json nested = value;
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) nested = json{{*it, nested}};
  merge(nested);
}

void RunConfig::set(std::string_view dotted_key, std::string_view value_text) {
  const json slot = at(dotted_key);
  const std::string text(value_text);
  if (slot.is_string()) {
    set_json(dotted_key, text);
    return;
  }
  auto parse = [&](const std::string& t) {
    try {
      return json::parse(t);
    } catch (const json::exception&) {
      throw ConfigError("config key '" + std::string(dotted_key) + "': cannot parse '" + t + "'");
    }
  };
  if (slot.is_array() && (text.empty() || text.front() != '[')) {
    json arr = json::array();
    std::size_t start = 0;
    while (start <= text.size() && !text.empty()) {
      const std::size_t comma = text.find(',', start);
      const std::string item = text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
      json v;
      try {
        v = json::parse(item);
      } catch (const json::exception&) {
        v = item;
      }
      arr.push_back(v);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    set_json(dotted_key, arr);
    return;
  }
  set_json(dotted_key, parse(text));
}

json RunConfig::at(std::string_view dotted_key) const {
  const ordered_json* node = &tree_;
  for (const auto& part : split_key(dotted_key)) {
    if (!node->is_object() || !node->contains(part)) {
      throw ConfigError("unknown config key '" + std::string(dotted_key) + "'");
    }
    node = &node->at(part);
  }
  return *node;
}

ModelConfig RunConfig::model() const {
  ModelConfig m;
  m.arch = parse_arch(get<std::string>(tree_, "model", "arch"));
  m.width = positive_int(tree_, "model", "width");
  m.depth = positive_int(tree_, "model", "depth");
  m.seed = seed_of(tree_, "model");
  m.groups = std::min<std::size_t>(8, m.width);
  return m;
}

NoiseSchedule RunConfig::schedule() const {
  return NoiseSchedule::linear(positive_int(tree_, "schedule", "T"),
                               get<double>(tree_, "schedule", "beta_start"),
                               get<double>(tree_, "schedule", "beta_end"));
}

SamplerConfig RunConfig::sampler() const {
  SamplerConfig s;
  s.steps = positive_int(tree_, "sampler", "N");
  s.solver = parse_solver(get<std::string>(tree_, "sampler", "solver"));
  s.guidance_weight = get<double>(tree_, "sampler", "guidance_weight");
  if (s.guidance_weight < 0.0) throw ConfigError("sampler.guidance_weight must be >= 0");
  s.seed = seed_of(tree_, "sampler");
  s.class_label = get<int>(tree_, "sampler", "class_label");
  if (s.class_label < kUnconditional) throw ConfigError("sampler.class_label must be >= -1");
  return s;
}

KeyframeSet RunConfig::keyframes() const {
  const int steps = positive_int(tree_, "sampler", "N");
  const auto& explicit_k = tree_.at("fr").at("keyframes");
  if (!explicit_k.empty()) {
    std::vector<int> members;
    for (const auto& v : explicit_k) {
      if (!v.is_number_integer()) throw ConfigError("fr.keyframes must hold integers");
      members.push_back(v.get<int>());
    }
    return KeyframeSet(steps, std::move(members));
  }
  return KeyframeSet::uniform(steps, positive_int(tree_, "fr", "interval"));
}

MixingSchedule RunConfig::mixing() const {
  return {get<double>(tree_, "fr", "tau"), get<double>(tree_, "fr", "bias"),
          get<bool>(tree_, "fr", "mixing")};
}

ReuseScope RunConfig::reuse_scope() const {
  std::vector<std::string> names;
  for (const auto& v : tree_.at("fr").at("reuse_scope")) {
    if (!v.is_string()) throw ConfigError("fr.reuse_scope must hold block kind names");
    names.push_back(v.get<std::string>());
  }
  return ReuseScope::parse(names);
}

TrainConfig RunConfig::train() const {
  TrainConfig t;
  const long long steps = get<long long>(tree_, "train", "steps");
  if (steps < 0) throw ConfigError("train.steps must be >= 0");
  t.steps = static_cast<std::size_t>(steps);
  t.lr = get<double>(tree_, "train", "lr");
  t.batch = positive_int(tree_, "train", "batch");
  t.seed = seed_of(tree_, "train");
  t.cond_drop = get<double>(tree_, "train", "cond_drop");
  if (t.cond_drop < 0.0 || t.cond_drop > 1.0) throw ConfigError("train.cond_drop must be in [0, 1]");
  return t;
}

CorpusKind RunConfig::corpus() const { return parse_corpus(get<std::string>(tree_, "train", "corpus")); }

AutoFrConfig RunConfig::autofr() const {
  AutoFrConfig a;
  a.cost_lambda = get<double>(tree_, "autofr", "cost_lambda");
  a.lr = get<double>(tree_, "autofr", "lr");
  a.beta1 = get<double>(tree_, "autofr", "beta1");
  a.beta2 = get<double>(tree_, "autofr", "beta2");
  a.iterations = positive_int(tree_, "autofr", "iters");
  a.batch = positive_int(tree_, "autofr", "batch");
  a.seed = seed_of(tree_, "autofr");
  a.theta_init = get<double>(tree_, "autofr", "theta_init");
  a.threads = threads();
  return a;
}

unsigned RunConfig::threads() const {
  const long long t = tree_.at("threads").get<long long>();
  if (t < 0) throw ConfigError("threads must be >= 0");
  return static_cast<unsigned>(t);
}

}  // namespace frdiff
