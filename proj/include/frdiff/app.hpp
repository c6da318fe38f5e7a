// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "frdiff/config.hpp"

namespace frdiff {

const std::vector<std::string>& command_names();

struct RunResult {
  std::filesystem::path run_dir;
  nlohmann::ordered_json summary;
};

// Executes one command. The run directory is io.out_dir/io.run_name (the
// command name when run_name is empty) and receives config.json, summary.json
// and the command's CSVs, tensor dumps and images.
RunResult run_command(const RunConfig& config, std::string_view command);

}  // namespace frdiff
