// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "frdiff/app.hpp"

#include <algorithm>
#include <fstream>

#include "frdiff/analysis.hpp"
#include "frdiff/errors.hpp"
#include "frdiff/parallel.hpp"
#include "frdiff/tape.hpp"
#include "frdiff/tensor_io.hpp"

namespace frdiff {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"train",   "sample",  "autofr",
                                              "analyze-similarity", "analyze-psd",
                                              "profile", "verify-equivalence"};
  return names;
}

namespace {

struct Context {
  const RunConfig& config;
  fs::path dir;
  ordered_json summary;
};

void write_json(const fs::path& path, const ordered_json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// Trained weights from io.checkpoint, or fresh weights from the model section.
ScoreNetwork load_network(Context& ctx) {
  const std::string ckpt = ctx.config.at("io.checkpoint").get<std::string>();
  ctx.summary["checkpoint"] = ckpt;
  if (ckpt.empty()) return ScoreNetwork(ctx.config.model());
  return load_checkpoint(ckpt);
}

void write_image(const fs::path& path_no_ext, const Tensor& img) {
  if (img.rank() == 3 && img.dim(0) == 3) {
    write_ppm(path_no_ext.string() + ".ppm", img);
  } else if (img.rank() == 3 && img.dim(0) == 1) {
    write_pgm(path_no_ext.string() + ".pgm", img);
  }
}

void cmd_train(Context& ctx) {
  const RunConfig& c = ctx.config;
  const Dataset data = make_corpus(c.corpus(), c.at("train.corpus_size").get<std::size_t>(),
                                   c.at("train.corpus_seed").get<std::uint64_t>());
  ModelConfig mc = c.model();
  const Shape s = data.sample_shape();
  mc.channels = s[0];
  mc.height = s[1];
  mc.image_width = s[2];
  mc.num_classes = data.num_classes;
  ScoreNetwork net(mc);
  const TrainResult r = train_toy(net, data, c.schedule(), c.train());
  write_loss_csv(ctx.dir / "loss.csv", r.losses);
  save_checkpoint(net, ctx.dir / "checkpoint");
  ctx.summary["steps"] = r.losses.size();
  ctx.summary["parameters"] = net.parameter_count();
  if (!r.losses.empty()) {
    ctx.summary["first_loss"] = r.losses.front();
    ctx.summary["final_loss"] = r.losses.back();
  }
  ctx.summary["checkpoint"] = (ctx.dir / "checkpoint").string();
}

void cmd_sample(Context& ctx) {
  const RunConfig& c = ctx.config;
  const ScoreNetwork net = load_network(ctx);
  const NoiseSchedule schedule = c.schedule();
  const SamplerConfig base = c.sampler();
  const KeyframeSet keys = c.keyframes();
  const MixingSchedule mixing = c.mixing();
  const ReuseScope scope = c.reuse_scope();
  const std::size_t count = c.at("sampler.samples").get<std::size_t>();
  if (count == 0) throw ConfigError("sampler.samples must be >= 1");

  std::vector<Trajectory> trajs(count);
  parallel_for(count, c.threads(), [&](std::size_t j) {
    NoGradScope no_grad;
    SamplerConfig sc = base;
    sc.seed = base.seed + j;
    trajs[j] = frdiff_sample(net, schedule, sc, keys, mixing, scope);
  });

  ordered_json runs = ordered_json::array();
  for (std::size_t j = 0; j < count; ++j) {
    const std::string tag = "seed" + std::to_string(base.seed + j);
    const Trajectory& t = trajs[j];
    write_tensor(ctx.dir, "sample_" + tag, t.final_sample);
    write_image(ctx.dir / ("sample_" + tag), t.final_sample);
    write_cost_ledger(ctx.dir / ("ledger_" + tag + ".csv"), t);
    int evals = 0;
    std::uint64_t executed = 0, skipped = 0;
    for (const auto& s : t.steps) {
      evals += s.network_evals;
      executed += s.s_ops_executed;
      skipped += s.s_ops_skipped;
    }
    runs.push_back({{"seed", base.seed + j},
                    {"network_evals", evals},
                    {"s_ops_executed", executed},
                    {"s_ops_skipped", skipped},
                    {"total_ops", t.total_ops},
                    {"wallclock_ms", t.wallclock_ms}});
  }
  ctx.summary["keyframes"] = keys.members();
  ctx.summary["samples"] = runs;
}

void cmd_autofr(Context& ctx) {
  const RunConfig& c = ctx.config;
  const ScoreNetwork net = load_network(ctx);
  const AutoFrResult r = autofr_search(net, c.schedule(), c.sampler(), c.mixing(), c.autofr(),
                                       c.reuse_scope(), ctx.dir / "ground_truth");
  write_autofr_csvs(ctx.dir, r);
  write_json(ctx.dir / "keyframes.json", ordered_json(r.keyframes.members()));
  ctx.summary["keyframes"] = r.keyframes.members();
  ctx.summary["keyframe_count"] = r.keyframes.size();
  ctx.summary["initial_total"] = r.history.front().total;
  ctx.summary["final_total"] = r.history.back().total;
  ctx.summary["final_fidelity"] = r.history.back().fidelity;
  ctx.summary["final_cost"] = r.history.back().cost;
}

void cmd_similarity(Context& ctx) {
  const RunConfig& c = ctx.config;
  const ScoreNetwork net = load_network(ctx);
  const NoiseSchedule schedule = c.schedule();
  const SamplerConfig base = c.sampler();
  const std::size_t count = c.at("analysis.trajectories").get<std::size_t>();
  if (count == 0) throw ConfigError("analysis.trajectories must be >= 1");
  std::vector<FeatureTrace> traces(count);
  parallel_for(count, c.threads(), [&](std::size_t j) {
    NoGradScope no_grad;
    SamplerConfig sc = base;
    sc.seed = base.seed + j;
    traces[j] = record_features(net, schedule, sc);
  });
  const SimilarityReport rep = temporal_change(traces, c.at("analysis.delta").get<int>());
  write_similarity_csv(ctx.dir / "similarity.csv", rep);

  const FeatureTrace& first = traces.front();
  const std::size_t steps = first.size();
  for (std::size_t n : {std::size_t{0}, steps / 2, steps - 1}) {
    for (std::size_t i = 0; i < first[n].size(); ++i) {
      const Tensor& f = first[n][i];
      const std::string name = "heatmap_layer" + std::to_string(i + 1) + "_iter" + std::to_string(n + 1) + ".pgm";
      if (f.rank() == 3) write_heatmap_pgm(ctx.dir / name, f);
    }
  }
  ordered_json layers = ordered_json::array();
  for (std::size_t i = 0; i < rep.mean.size(); ++i) {
    const auto& m = rep.mean[i];
    double avg = 0.0;
    for (double v : m) avg += v / m.size();
    layers.push_back({{"layer", i + 1},
                      {"kind", block_kind_name(net.block(i).kind())},
                      {"mean_change", avg},
                      {"max_change", *std::max_element(m.begin(), m.end())}});
  }
  ctx.summary["trajectories"] = count;
  ctx.summary["delta"] = rep.delta;
  ctx.summary["layers"] = layers;
}

void cmd_psd(Context& ctx) {
  const RunConfig& c = ctx.config;
  const ScoreNetwork net = load_network(ctx);
  const std::size_t count = c.at("analysis.psd_samples").get<std::size_t>();
  const int interval = c.at("fr.interval").get<int>();
  const SpectralComparison s =
      compare_spectra(net, c.schedule(), c.sampler(), interval, c.mixing(), count, c.threads());
  write_psd_csv(ctx.dir / "psd_baseline.csv", s.baseline);
  write_psd_csv(ctx.dir / "psd_reuse.csv", s.reuse);
  write_psd_csv(ctx.dir / "psd_mixing.csv", s.mixing);
  write_psd_csv(ctx.dir / "psd_reduced_nfe.csv", s.reduced);
  auto deficit = [&](const PsdCurve& p) {
    std::vector<double> d;
    for (std::size_t r = 0; r < p.rings(); ++r) d.push_back(s.baseline.log_power[r] - p.log_power[r]);
    return d;
  };
  ctx.summary["samples"] = count;
  ctx.summary["fr_interval"] = interval;
  ctx.summary["reduced_steps"] = s.reduced_steps;
  ctx.summary["ops"] = {{"baseline", s.baseline_ops},
                        {"reuse", s.reuse_ops},
                        {"mixing", s.mixing_ops},
                        {"reduced_nfe", s.reduced_ops}};
  ctx.summary["log_power_deficit"] = {{"reuse", deficit(s.reuse)},
                                      {"mixing", deficit(s.mixing)},
                                      {"reduced_nfe", deficit(s.reduced)}};
}

void cmd_profile(Context& ctx) {
  const RunConfig& c = ctx.config;
  const SamplerConfig sc = c.sampler();
  const double skippable = c.at("analysis.skippable").get<double>();
  const std::string latency = c.at("analysis.latency_csv").get<std::string>();
  CostModel model;
  model.steps = sc.steps;
  model.keyframes = c.keyframes();

  if (!latency.empty()) {
    model.blocks = read_latency_csv(latency);
    ctx.summary["cost_source"] = "latency_csv";
  } else if (skippable >= 0.0) {
    model.blocks = {{"block", 1.0, skippable}};
    ctx.summary["cost_source"] = "uniform";
  } else {
    const ScoreNetwork net = load_network(ctx);
    model.blocks = measured_cost_entries(net, 500.0, sc.class_label);
    ctx.summary["cost_source"] = "measured_ops";
    NoGradScope no_grad;
    const NoiseSchedule schedule = c.schedule();
    const Trajectory full = sample(net, schedule, sc);
    const Trajectory fr = frdiff_sample(net, schedule, sc, model.keyframes,
                                        {c.mixing().tau, c.mixing().bias, false}, c.reuse_scope());
    write_cost_ledger(ctx.dir / "ledger_baseline.csv", full);
    write_cost_ledger(ctx.dir / "ledger_fr.csv", fr);
    ctx.summary["measured_ops_speedup"] =
        static_cast<double>(full.total_ops) / static_cast<double>(fr.total_ops);
    ctx.summary["wallclock_ms"] = {{"baseline", full.wallclock_ms}, {"fr", fr.wallclock_ms}};
  }
  std::ofstream table(ctx.dir / "cost_model.csv", std::ios::trunc);
  table.precision(12);
  table << "name,cost,skippable\n";
  for (const auto& b : model.blocks) table << b.name << ',' << b.cost << ',' << b.skippable << '\n';
  ctx.summary["steps"] = sc.steps;
  ctx.summary["keyframes"] = model.keyframes.size();
  ctx.summary["speedup"] = speedup_model(model);
  CostModel with_skip = model;
  with_skip.mixing = c.mixing();
  ctx.summary["speedup_with_lambda_skip"] = speedup_model(with_skip);
}

void cmd_verify(Context& ctx) {
  const RunConfig& c = ctx.config;
  const std::string weights = c.at("verify.weights").get<std::string>();
  ScoreNetwork net = [&] {
    if (weights == "random") return ScoreNetwork(c.model());
    if (weights == "checkpoint") {
      if (c.at("io.checkpoint").get<std::string>().empty()) {
        throw ConfigError("verify.weights = checkpoint needs io.checkpoint");
      }
      return load_network(ctx);
    }
    throw ConfigError("verify.weights must be 'random' or 'checkpoint'");
  }();
  const EquivalenceReport r =
      verify_nfe_equivalence(net, c.schedule(), c.sampler(), c.at("verify.stride").get<int>());
  ctx.summary["weights"] = weights;
  ctx.summary["stride"] = c.at("verify.stride").get<int>();
  ctx.summary["steps"] = c.sampler().steps;
  ctx.summary["reduced_steps"] = r.reduced_steps;
  ctx.summary["uneven"] = r.uneven;
  ctx.summary["max_abs_dev"] = r.max_abs_dev;
}

}  // namespace

RunResult run_command(const RunConfig& config, std::string_view command) {
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), command) == names.end()) {
    throw ConfigError("unknown command '" + std::string(command) + "'");
  }
  std::string run_name = config.at("io.run_name").get<std::string>();
  if (run_name.empty()) run_name = std::string(command);
  Context ctx{config, fs::path(config.at("io.out_dir").get<std::string>()) / run_name, {}};
  fs::create_directories(ctx.dir);
  write_json(ctx.dir / "config.json", config.tree());
  ctx.summary["command"] = command;

  if (command == "train") cmd_train(ctx);
  else if (command == "sample") cmd_sample(ctx);
  else if (command == "autofr") cmd_autofr(ctx);
  else if (command == "analyze-similarity") cmd_similarity(ctx);
  else if (command == "analyze-psd") cmd_psd(ctx);
  else if (command == "profile") cmd_profile(ctx);
  else cmd_verify(ctx);

  write_json(ctx.dir / "summary.json", ctx.summary);
  return {ctx.dir, ctx.summary};
}

}  // namespace frdiff
