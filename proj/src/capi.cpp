// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "frdiff/frdiff_c.h"

#include <cstring>
#include <string>

#include "frdiff/analysis.hpp"
#include "frdiff/app.hpp"
#include "frdiff/errors.hpp"

struct frdiff_config {
  frdiff::RunConfig config;
};

struct frdiff_result {
  std::string summary;
  std::string run_dir;
};

namespace {

thread_local std::string last_error;

template <class F>
frdiff_status guarded(F&& fn) {
  try {
    fn();
    last_error.clear();
    return FRDIFF_OK;
  } catch (const frdiff::NumericalError& e) {
    last_error = e.what();
    return FRDIFF_ERR_NUMERIC;
  } catch (const frdiff::IoError& e) {
    last_error = e.what();
    return FRDIFF_ERR_IO;
  } catch (const std::invalid_argument& e) {
    last_error = e.what();
    return FRDIFF_ERR_CONFIG;
  } catch (const nlohmann::json::exception& e) {
    last_error = e.what();
    return FRDIFF_ERR_CONFIG;
  } catch (const std::filesystem::filesystem_error& e) {
    last_error = e.what();
    return FRDIFF_ERR_IO;
  } catch (const std::exception& e) {
    last_error = e.what();
    return FRDIFF_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return FRDIFF_ERR_INTERNAL;
  }
}

frdiff_status bad_argument(const char* what) {
  last_error = what;
  return FRDIFF_ERR_ARGUMENT;
}

char* copy_string(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* frdiff_version(void) { return "0.1.0"; }

const char* frdiff_last_error(void) { return last_error.c_str(); }

void frdiff_string_free(char* s) { delete[] s; }

size_t frdiff_command_count(void) { return frdiff::command_names().size(); }

const char* frdiff_command_name(size_t index) {
  const auto& names = frdiff::command_names();
  return index < names.size() ? names[index].c_str() : nullptr;
}

frdiff_status frdiff_config_create(frdiff_config** out) {
  if (out == nullptr) return bad_argument("frdiff_config_create: null output");
  return guarded([&] { *out = new frdiff_config{}; });
}

void frdiff_config_destroy(frdiff_config* config) { delete config; }

frdiff_status frdiff_config_load_file(frdiff_config* config, const char* path) {
  if (config == nullptr || path == nullptr) return bad_argument("frdiff_config_load_file: null argument");
  return guarded([&] { config->config.merge_file(path); });
}

frdiff_status frdiff_config_set(frdiff_config* config, const char* key, const char* value) {
  if (config == nullptr || key == nullptr || value == nullptr) {
    return bad_argument("frdiff_config_set: null argument");
  }
  return guarded([&] { config->config.set(key, value); });
}

frdiff_status frdiff_config_dump(const frdiff_config* config, char** out_json) {
  if (config == nullptr || out_json == nullptr) return bad_argument("frdiff_config_dump: null argument");
  return guarded([&] { *out_json = copy_string(config->config.dump()); });
}

frdiff_status frdiff_config_get(const frdiff_config* config, const char* key, char** out_json) {
  if (config == nullptr || key == nullptr || out_json == nullptr) {
    return bad_argument("frdiff_config_get: null argument");
  }
  return guarded([&] { *out_json = copy_string(config->config.at(key).dump()); });
}

frdiff_status frdiff_defaults_dump(char** out_json) {
  if (out_json == nullptr) return bad_argument("frdiff_defaults_dump: null output");
  return guarded([&] { *out_json = copy_string(frdiff::RunConfig::defaults().dump(2)); });
}

frdiff_status frdiff_run(const frdiff_config* config, const char* command, frdiff_result** out) {
  if (config == nullptr || command == nullptr || out == nullptr) {
    return bad_argument("frdiff_run: null argument");
  }
  return guarded([&] {
    frdiff::RunResult r = frdiff::run_command(config->config, command);
    *out = new frdiff_result{r.summary.dump(2), r.run_dir.string()};
  });
}

const char* frdiff_result_summary(const frdiff_result* result) {
  return result != nullptr ? result->summary.c_str() : nullptr;
}

const char* frdiff_result_run_dir(const frdiff_result* result) {
  return result != nullptr ? result->run_dir.c_str() : nullptr;
}

void frdiff_result_destroy(frdiff_result* result) { delete result; }

frdiff_status frdiff_speedup(double skippable, int steps, int interval, double* out) {
  if (out == nullptr) return bad_argument("frdiff_speedup: null output");
  return guarded([&] { *out = frdiff::speedup_model(frdiff::uniform_cost_model(skippable, steps, interval)); });
}

frdiff_status frdiff_mixing_lambda(int iteration, int steps, double tau, double bias, double* out) {
  if (out == nullptr) return bad_argument("frdiff_mixing_lambda: null output");
  return guarded([&] {
    if (steps < 1 || iteration < 1 || iteration > steps) {
      throw frdiff::ConfigError("iteration must lie in [1, steps]");
    }
    *out = frdiff::lambda_of(iteration, steps, {tau, bias, true});
  });
}

frdiff_status frdiff_uniform_keyframes(int steps, int interval, int* out, size_t capacity,
                                       size_t* count) {
  if (count == nullptr || (out == nullptr && capacity > 0)) {
    return bad_argument("frdiff_uniform_keyframes: null argument");
  }
  return guarded([&] {
    const auto k = frdiff::KeyframeSet::uniform(steps, interval);
    *count = k.size();
    for (size_t i = 0; i < k.size() && i < capacity; ++i) out[i] = k.members()[i];
  });
}

}  // extern "C"
