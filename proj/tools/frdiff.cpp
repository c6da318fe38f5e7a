// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

// frdiff command-line front end. Every flag maps onto one config key; the
// merge order is defaults < --config file < FRDIFF_OUT < --set < flags.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "frdiff/frdiff_c.h"

namespace {

using nlohmann::json;

struct Flag {
  const char* name;
  const char* key;
  const char* help;
};

const std::vector<Flag> kModelFlags{
    {"--arch", "model.arch", "network architecture: toy_unet or toy_dit"},
    {"--width", "model.width", "channel / token width"},
    {"--depth", "model.depth", "residual blocks (toy_unet) or block pairs (toy_dit)"},
    {"--model-seed", "model.seed", "weight initialisation seed"},
    {"--T", "schedule.T", "diffusion horizon"},
    {"--beta-start", "schedule.beta_start", "first beta of the linear schedule"},
    {"--beta-end", "schedule.beta_end", "last beta of the linear schedule"},
    {"--checkpoint", "io.checkpoint", "checkpoint directory; empty uses fresh weights"},
};

const std::vector<Flag> kSamplerFlags{
    {"--steps", "sampler.N", "sampling iterations N"},
    {"--solver", "sampler.solver", "ddim or ddpm"},
    {"--guidance", "sampler.guidance_weight", "classifier-free guidance weight w"},
    {"--label", "sampler.class_label", "class label, -1 for unconditional"},
    {"--seed", "sampler.seed", "first noise seed"},
};

const std::vector<Flag> kReuseFlags{
    {"--fr-interval", "fr.interval", "keyframe interval M"},
    {"--keyframes", "fr.keyframes", "explicit keyframes, comma separated (overrides the interval)"},
    {"--tau", "fr.tau", "score-mixing temperature"},
    {"--bias", "fr.bias", "score-mixing bias"},
    {"--mixing", "fr.mixing", "enable score mixing (true/false)"},
    {"--reuse-scope", "fr.reuse_scope", "block kinds to reuse, comma separated, or all"},
};

const std::vector<Flag> kIoFlags{
    {"--out", "io.out_dir", "output root directory"},
    {"--run-name", "io.run_name", "run directory name; defaults to the command"},
    {"--threads", "threads", "worker threads, 0 = all cores"},
};

const std::map<std::string, std::vector<Flag>> kCommandFlags{
    {"train",
     {{"--corpus", "train.corpus", "toy corpus: shapes or gmm"},
      {"--corpus-size", "train.corpus_size", "corpus samples"},
      {"--corpus-seed", "train.corpus_seed", "corpus generator seed"},
      {"--train-steps", "train.steps", "optimiser steps"},
      {"--lr", "train.lr", "Adam learning rate"},
      {"--batch", "train.batch", "samples per step"},
      {"--seed", "train.seed", "training seed"},
      {"--cond-drop", "train.cond_drop", "probability of training on the null class"}}},
    {"sample", {{"--samples", "sampler.samples", "number of samples (consecutive seeds)"}}},
    {"autofr",
     {{"--cost-lambda", "autofr.cost_lambda", "weight of the keyframe cost term"},
      {"--iters", "autofr.iters", "optimiser iterations"},
      {"--lr", "autofr.lr", "Adam learning rate"},
      {"--beta1", "autofr.beta1", "Adam first-moment decay"},
      {"--beta2", "autofr.beta2", "Adam second-moment decay"},
      {"--batch", "autofr.batch", "noise seeds per step"},
      {"--search-seed", "autofr.seed", "first noise seed of the search batch"},
      {"--theta-init", "autofr.theta_init", "initial gate logit"}}},
    {"analyze-similarity",
     {{"--trajectories", "analysis.trajectories", "trajectories averaged"},
      {"--delta", "analysis.delta", "iteration gap"}}},
    {"analyze-psd", {{"--psd-samples", "analysis.psd_samples", "samples per sampler"}}},
    {"profile",
     {{"--skippable", "analysis.skippable", "uniform skippable fraction; negative measures the model"},
      {"--latency-csv", "analysis.latency_csv", "per-block cost table (name,cost,skippable)"}}},
    {"verify-equivalence",
     {{"--stride", "verify.stride", "reuse window length"},
      {"--weights", "verify.weights", "random or checkpoint"}}},
};

const std::map<std::string, std::string> kDescriptions{
    {"train", "train the toy score network on a built-in corpus"},
    {"sample", "sample with feature reuse and score mixing"},
    {"autofr", "search a keyframe set by gradient descent on gate logits"},
    {"analyze-similarity", "temporal change of block outputs along trajectories"},
    {"analyze-psd", "radial power spectra of baseline, reuse, mixing and reduced-step samples"},
    {"profile", "analytic speedup of a keyframe schedule"},
    {"verify-equivalence", "check that whole-score reuse equals DDIM with fewer steps"},
};

json defaults() {
  char* text = nullptr;
  if (frdiff_defaults_dump(&text) != FRDIFF_OK) return json::object();
  json j = json::parse(text);
  frdiff_string_free(text);
  return j;
}

std::string default_text(const json& tree, const std::string& key) {
  const json* node = &tree;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    node = &node->at(key.substr(start, dot == std::string::npos ? std::string::npos : dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (node->is_string()) return node->get<std::string>().empty() ? "\"\"" : node->get<std::string>();
  if (node->is_array()) {
    std::string s;
    for (const auto& v : *node) s += (s.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
    return s.empty() ? "[]" : s;
  }
  return node->dump();
}

int exit_code(frdiff_status s) {
  switch (s) {
    case FRDIFF_OK: return 0;
    case FRDIFF_ERR_CONFIG:
    case FRDIFF_ERR_IO:
    case FRDIFF_ERR_ARGUMENT: return 2;
    case FRDIFF_ERR_NUMERIC: return 3;
    default: return 1;
  }
}

struct Bound {
  const Flag* flag;
  std::string value;
  CLI::Option* option = nullptr;
};

struct ConfigHandle {
  frdiff_config* ptr = nullptr;
  ~ConfigHandle() { frdiff_config_destroy(ptr); }
};

}  // namespace

int main(int argc, char** argv) {
  const json tree = defaults();
  CLI::App app{"frdiff: feature-reuse acceleration for diffusion sampling"};
  app.require_subcommand(0, 1);
  std::string config_file;
  std::vector<std::string> sets;
  bool print_config = false;
  app.add_option("--config", config_file, "JSON config file merged over the defaults");
  app.add_option("--set", sets, "override any key: section.key=value")->take_all();
  app.add_flag("--print-config", print_config, "print the effective config and exit");

  std::map<std::string, std::vector<std::unique_ptr<Bound>>> bound;
  std::map<std::string, CLI::App*> subs;
  for (std::size_t i = 0; i < frdiff_command_count(); ++i) {
    const std::string name = frdiff_command_name(i);
    CLI::App* sub = app.add_subcommand(name, kDescriptions.at(name));
    subs[name] = sub;
    sub->add_option("--config", config_file, "JSON config file merged over the defaults");
    sub->add_option("--set", sets, "override any key: section.key=value")->take_all();
    sub->add_flag("--print-config", print_config, "print the effective config and exit");

    std::vector<const Flag*> flags;
    static const std::vector<Flag> kNone;
    const auto found = kCommandFlags.find(name);
    const std::vector<Flag>& own = found != kCommandFlags.end() ? found->second : kNone;
    for (const auto& f : own) flags.push_back(&f);
    auto add_group = [&](const std::vector<Flag>& group) {
      for (const auto& f : group) {
        bool shadowed = false;
        for (const auto& o : own) shadowed |= std::string(o.name) == f.name;
        if (!shadowed) flags.push_back(&f);
      }
    };
    add_group(kModelFlags);
    if (name != "train") add_group(kSamplerFlags);
    if (name != "train") add_group(kReuseFlags);
    add_group(kIoFlags);

    for (const Flag* f : flags) {
      auto b = std::make_unique<Bound>();
      b->flag = f;
      b->option = sub->add_option(f->name, b->value, std::string(f->help) + " [" + f->key + "]")
                      ->default_str(default_text(tree, f->key));
      bound[name].push_back(std::move(b));
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  ConfigHandle cfg;
  frdiff_status st = frdiff_config_create(&cfg.ptr);
  if (st == FRDIFF_OK && !config_file.empty()) st = frdiff_config_load_file(cfg.ptr, config_file.c_str());
  for (const auto& s : sets) {
    if (st != FRDIFF_OK) break;
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", s.c_str());
      return 2;
    }
    st = frdiff_config_set(cfg.ptr, s.substr(0, eq).c_str(), s.substr(eq + 1).c_str());
  }

  std::string command;
  for (const auto& [name, sub] : subs) {
    if (sub->parsed()) command = name;
  }
  if (!command.empty()) {
    for (const auto& b : bound[command]) {
      if (st != FRDIFF_OK) break;
      if (b->option->count() > 0) st = frdiff_config_set(cfg.ptr, b->flag->key, b->value.c_str());
    }
  }
  if (st != FRDIFF_OK) {
    std::fprintf(stderr, "error: %s\n", frdiff_last_error());
    return exit_code(st);
  }

  if (print_config || command.empty()) {
    if (command.empty() && !print_config) {
      std::fputs(app.help().c_str(), stdout);
      return 0;
    }
    char* text = nullptr;
    frdiff_config_dump(cfg.ptr, &text);
    std::printf("%s\n", text);
    frdiff_string_free(text);
    return 0;
  }

  frdiff_result* result = nullptr;
  st = frdiff_run(cfg.ptr, command.c_str(), &result);
  if (st != FRDIFF_OK) {
    std::fprintf(stderr, "error: %s\n", frdiff_last_error());
    return exit_code(st);
  }
  const json summary = json::parse(frdiff_result_summary(result));
  if (command == "profile") std::printf("speedup %.3f\n", summary.at("speedup").get<double>());
  if (command == "verify-equivalence") {
    std::printf("max_abs_dev %.3e\n", summary.at("max_abs_dev").get<double>());
  }
  if (command == "autofr") std::printf("keyframes %s\n", summary.at("keyframes").dump().c_str());
  std::printf("run_dir %s\n", frdiff_result_run_dir(result));
  frdiff_result_destroy(result);
  return 0;
}
