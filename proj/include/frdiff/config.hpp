// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "frdiff/autofr.hpp"
#include "frdiff/corpus.hpp"
#include "frdiff/train.hpp"

namespace frdiff {

// Run configuration: a JSON tree whose every key has a default. Unknown keys
// and type mismatches are rejected with ConfigError.
class RunConfig {
 public:
  RunConfig();

  static const nlohmann::ordered_json& defaults();

  // Deep-merges a JSON object (file contents or a parsed string).
  void merge(const nlohmann::json& overrides);
  void merge_file(const std::filesystem::path& path);
  // Dotted key such as "fr.interval"; the value is JSON text, falling back to
  // a plain string when it does not parse.
  void set(std::string_view dotted_key, std::string_view value_text);
  void set_json(std::string_view dotted_key, const nlohmann::json& value);
  nlohmann::json at(std::string_view dotted_key) const;

  const nlohmann::ordered_json& tree() const { return tree_; }
  std::string dump(int indent = 2) const { return tree_.dump(indent); }

  ModelConfig model() const;
  NoiseSchedule schedule() const;
  SamplerConfig sampler() const;
  // Explicit fr.keyframes when non-empty, otherwise uniform with fr.interval.
  KeyframeSet keyframes() const;
  MixingSchedule mixing() const;
  ReuseScope reuse_scope() const;
  TrainConfig train() const;
  CorpusKind corpus() const;
  AutoFrConfig autofr() const;
  unsigned threads() const;

 private:
  nlohmann::ordered_json tree_;
};

}  // namespace frdiff
