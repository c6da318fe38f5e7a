// Copyright 2026 The frdiff Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit when any
// criterion fails. Usage: frdiff_acceptance <checkpoint-dir>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "fd_oracle.hpp"
#include "frdiff/analysis.hpp"
#include "frdiff/autofr.hpp"
#include "frdiff/ops.hpp"
#include "frdiff/reuse.hpp"
#include "frdiff/rng.hpp"
#include "gradient_cases.hpp"
#include "test_util.hpp"

using namespace frdiff;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "failed: " << what << "; ";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

NoiseSchedule default_schedule() { return NoiseSchedule::linear(1000, 1e-4, 0.02); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// P(X >= k) for X ~ Binomial(n, 1/2).
double sign_test_p(int k, int n) {
  double p = 0.0;
  for (int i = k; i <= n; ++i) {
    p += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) -
                  n * std::log(2.0));
  }
  return p;
}

// 1. Interval one equals plain sampling bit for bit.
void baseline_identity(const ScoreNetwork& net, Outcome& o) {
  const auto start = Clock::now();
  int checked = 0;
  for (int N : {10, 50}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      SamplerConfig cfg;
      cfg.steps = N;
      cfg.seed = 1000 + seed;
      const Tensor a = sample(net, default_schedule(), cfg).final_sample;
      const Tensor b =
          frdiff_sample(net, default_schedule(), cfg, KeyframeSet::all(N), MixingSchedule{}).final_sample;
      o.require(bit_equal(a, b), "N=" + std::to_string(N) + " seed " + std::to_string(seed));
      ++checked;
    }
  }
  const double t = seconds_since(start);
  o.require(t < 60.0, "runtime under 1 min");
  o.detail << checked << " trajectories bit-identical, " << t << " s";
}

// 2. Whole-score reuse with stride m equals DDIM with N/m steps.
void reduced_nfe(const ScoreNetwork& trained, Outcome& o) {
  const auto start = Clock::now();
  double worst2 = 0.0, worst5 = 0.0;
  for (std::uint64_t k = 0; k < 5; ++k) {
    const ScoreNetwork random = build_toy_network(k % 2 ? Arch::toy_dit : Arch::toy_unet, 32, 4, 50 + k);
    for (const ScoreNetwork* net : {&random, &trained}) {
      SamplerConfig cfg;
      cfg.steps = 50;
      cfg.seed = 2000 + k;
      worst2 = std::max(worst2, verify_nfe_equivalence(*net, default_schedule(), cfg, 2).max_abs_dev);
      worst5 = std::max(worst5, verify_nfe_equivalence(*net, default_schedule(), cfg, 5).max_abs_dev);
    }
  }
  const double t = seconds_since(start);
  o.require(worst2 < 1e-10, "stride 2 deviation < 1e-10");
  o.require(worst5 < 1e-9, "stride 5 deviation < 1e-9");
  o.require(t < 60.0, "runtime under 1 min");
  o.detail << "max dev stride 2 " << worst2 << ", stride 5 " << worst5 << " over random and trained weights, "
           << t << " s";
}

// 3. Finite-difference suite for every op and the gate gradient.
void gradient_suite(const ScoreNetwork& trained, Outcome& o) {
  const auto start = Clock::now();
  double worst_op = 0.0;
  std::string worst_name;
  const auto cases = testing::gradient_cases();
  for (const auto& c : cases) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const double err = testing::gradient_error(c.f, c.make(seed));
      if (err > worst_op) {
        worst_op = err;
        worst_name = c.name;
      }
    }
  }
  const ScoreNetwork dit = build_toy_network(Arch::toy_dit, 16, 2, 9);
  double worst_gate = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ScoreNetwork& net = seed % 2 ? dit : trained;
    auto f = testing::make_gate_objective(net, seed, 6);
    worst_gate = std::max(worst_gate, testing::gradient_error(f, {Tensor({f.theta0.size()}, f.theta0)}));
  }
  const double t = seconds_since(start);
  o.require(worst_op < 1e-6, "op gradients within 1e-6 (worst " + worst_name + ")");
  o.require(worst_gate < 1e-5, "gate gradients within 1e-5");
  o.require(t < 120.0, "runtime under 2 min");
  o.detail << cases.size() << " ops x 20 instances, worst " << worst_op << " (" << worst_name
           << "); 20 gate instances, worst " << worst_gate << ", " << t << " s";
}

// 4. Mixing weights against the closed form.
void mixing_schedule(Outcome& o) {
  const MixingSchedule m;
  int checked = 0, zeros = 0, ones = 0;
  for (int N : {8, 10, 20, 40, 50, 100, 1000}) {
    for (int n = 1; n <= N; ++n) {
      const double direct = std::clamp((30.0 * (double(n) / N - 0.5) + 2.0) / 4.0, 0.0, 1.0);
      const double got = lambda_of(n, N, m);
      o.require(got == direct, "lambda(" + std::to_string(n) + "/" + std::to_string(N) + ")");
      const double u = double(n) / N;
      if (u <= 0.5 - 2.0 / 30.0) {
        o.require(got == 0.0, "exact zero region");
        ++zeros;
      }
      if (u >= 0.5 + 2.0 / 30.0) {
        o.require(got == 1.0, "exact one region");
        ++ones;
      }
      if (2 * n == N) o.require(got == 0.5, "lambda = 0.5 at n/N = b");
      ++checked;
    }
  }
  o.detail << checked << " values, " << zeros << " clamped to 0, " << ones << " clamped to 1";
}

// 5. Analytic cost model.
void cost_model(Outcome& o) {
  const double s = 0.92, asymptote = 1.0 / (1.0 - s);
  const double m1 = speedup_model(uniform_cost_model(s, 50, 1));
  const double m2 = speedup_model(uniform_cost_model(s, 50, 2));
  bool monotone = true;
  double prev = 0.0;
  for (int M = 1; M <= 50; ++M) {
    const double v = speedup_model(uniform_cost_model(s, 50, M));
    monotone &= v >= prev;
    prev = v;
  }
  const double m25 = speedup_model(uniform_cost_model(s, 50, 25));
  o.require(m1 == 1.0, "speedup(M=1) == 1");
  o.require(std::abs(m2 - 1.852) <= 1e-3, "speedup(N=50, M=2, s=0.92) = 1.852");
  o.require(monotone, "nondecreasing in M");
  o.require(m25 >= 0.95 * asymptote, "within 5% of 1/(1-s) by M=25");
  o.detail << "M=1 " << m1 << ", M=2 " << m2 << ", M=25 " << m25 << " vs asymptote " << asymptote
           << " (" << 100.0 * (1.0 - m25 / asymptote) << "% short)";
}

// 6. Split identity for every block kind.
void split_identity(const ScoreNetwork& trained, Outcome& o) {
  const ScoreNetwork dit = build_toy_network(Arch::toy_dit, 32, 2, 3);
  std::vector<int> per_kind(4, 0);
  Rng rng(17);
  std::uniform_real_distribution<double> time(1.0, 1000.0);
  for (const ScoreNetwork* net : {&trained, &dit}) {
    for (std::size_t i = 0; i < net->layer_count(); ++i) {
      const ResidualBlock& b = net->block(i);
      for (int k = 0; k < 100; ++k) {
        const Conditioning cond = net->condition(time(rng), static_cast<int>(rng() % 3) - 1);
        const Tensor h = net->embed(noise_tensor(net->sample_shape(), rng()));
        o.require(bit_equal(ops::add(b.suffix(b.prefix(h, cond), cond), h), b.forward(h, cond)),
                  std::string(block_kind_name(b.kind())));
        ++per_kind[static_cast<int>(b.kind())];
      }
    }
  }
  for (int k = 0; k < 4; ++k) {
    o.require(per_kind[k] >= 100, "100 inputs for " + std::string(block_kind_name(BlockKind(k))));
    o.detail << block_kind_name(BlockKind(k)) << " " << per_kind[k] << " ";
  }
  o.detail << "inputs bit-identical";
}

// 7. Auto-FR sweep over the cost weight.
void autofr_sweep(const ScoreNetwork& trained, Outcome& o) {
  const auto start = Clock::now();
  SamplerConfig cfg;
  cfg.steps = 40;
  cfg.class_label = kUnconditional;
  AutoFrConfig ac;
  ac.iterations = 100;
  ac.batch = 4;
  auto run = [&](double cost, std::uint64_t seed) {
    ac.cost_lambda = cost;
    ac.seed = seed;
    return autofr_search(trained, default_schedule(), cfg, MixingSchedule{}, ac);
  };

  const AutoFrResult free = run(0.0, 0);
  o.require(free.keyframes.size() == 40, "cost weight 0 keeps |K| = N");
  o.detail << "lambda_cost 0: |K| " << free.keyframes.size() << "; ";

  std::vector<double> med_k, med_mse, med_drop;
  for (double cost : {1e-4, 1e-3, 1e-2}) {
    std::vector<double> k, mse, drop;
    for (std::uint64_t seed : {0u, 10u, 20u}) {
      const AutoFrResult r = run(cost, seed);
      k.push_back(static_cast<double>(r.keyframes.size()));
      mse.push_back(r.history.back().fidelity);
      drop.push_back(r.history.front().total - r.history.back().total);
    }
    med_k.push_back(median(k));
    med_mse.push_back(median(mse));
    med_drop.push_back(median(drop));
    o.detail << "lambda_cost " << cost << ": median |K| " << med_k.back() << ", median MSE "
             << med_mse.back() << "; ";
  }
  for (std::size_t i = 1; i < med_k.size(); ++i) {
    o.require(med_k[i] <= med_k[i - 1], "|K| nonincreasing");
    o.require(med_mse[i] >= med_mse[i - 1], "final MSE nondecreasing");
  }
  const double t = seconds_since(start);
  o.require(t < 1800.0, "runtime under 30 min");
  o.detail << t << " s";
}

// 8. High-frequency ring power at matched cost.
void spectral_ordering(const ScoreNetwork& trained, Outcome& o) {
  SamplerConfig cfg;
  cfg.steps = 50;
  cfg.class_label = kUnconditional;
  const int interval = 2;
  const std::size_t samples = 256;
  const SpectralComparison s =
      compare_spectra(trained, default_schedule(), cfg, interval, MixingSchedule{}, samples);
  const std::size_t rings = s.baseline.rings();
  const std::size_t first = static_cast<std::size_t>(std::floor(0.75 * rings));
  const int n = static_cast<int>(samples);
  o.detail << "N=50, M=" << interval << ", reduced-NFE steps " << s.reduced_steps << " (ops "
           << s.reduced_ops << " vs FR " << s.reuse_ops << "); ";
  for (std::size_t r = first; r < rings; ++r) {
    int red_over_fr = 0, mix_under_fr = 0, mix_under_red = 0;
    for (std::size_t j = 0; j < samples; ++j) {
      const double base = std::log10(s.baseline_rings[j][r] + kPowerFloor);
      const double fr = base - std::log10(s.reuse_rings[j][r] + kPowerFloor);
      const double mix = base - std::log10(s.mixing_rings[j][r] + kPowerFloor);
      const double red = base - std::log10(s.reduced_rings[j][r] + kPowerFloor);
      red_over_fr += red > fr;
      mix_under_fr += mix <= fr;
      mix_under_red += mix <= red;
    }
    const double p1 = sign_test_p(red_over_fr, n), p2 = sign_test_p(mix_under_fr, n),
                 p3 = sign_test_p(mix_under_red, n);
    const std::string ring = "ring " + std::to_string(r);
    o.require(p1 < 0.05, ring + ": reduced-NFE deficit exceeds FR");
    o.require(p2 < 0.05, ring + ": mixing deficit <= FR");
    o.require(p3 < 0.05, ring + ": mixing deficit <= reduced-NFE");
    o.detail << ring << " reduced>FR " << red_over_fr << "/" << n << " (p " << p1 << "), mix<=FR "
             << mix_under_fr << "/" << n << " (p " << p2 << "), mix<=reduced " << mix_under_red << "/"
             << n << " (p " << p3 << "); ";
  }
}

// 9. Ledger reconciliation and wall-clock direction.
void ledger_audit(const ScoreNetwork& trained, Outcome& o) {
  const std::uint64_t L = trained.layer_count();
  int grids = 0;
  for (int N : {10, 25, 50}) {
    for (int M : {1, 2, 3}) {
      SamplerConfig cfg;
      cfg.steps = N;
      const std::uint64_t B = branch_labels(cfg).size();
      const KeyframeSet k = KeyframeSet::uniform(N, M);
      const Trajectory t = frdiff_sample(trained, default_schedule(), cfg, k, MixingSchedule{});
      std::uint64_t executed = 0, skipped = 0;
      for (const StepRecord& r : t.steps) {
        executed += r.s_ops_executed;
        skipped += r.s_ops_skipped;
        o.require(r.s_ops_executed + r.s_ops_skipped == L * B, "per-step conservation");
        const bool evaluates = r.keyframe || r.lambda > 0.0;
        o.require(r.network_evals == (evaluates ? static_cast<int>(B) : 0), "evaluation count");
      }
      const std::string tag = "(" + std::to_string(N) + "," + std::to_string(M) + ")";
      o.require(executed == k.size() * L * B, tag + " executed = |K| L B");
      o.require(skipped == (N - k.size()) * L * B, tag + " skipped = (N - |K|) L B");
      ++grids;
    }
  }
  SamplerConfig cfg;
  cfg.steps = 50;
  std::vector<double> full, reuse;
  for (int rep = 0; rep < 5; ++rep) {
    full.push_back(frdiff_sample(trained, default_schedule(), cfg, KeyframeSet::uniform(50, 1), {}).wallclock_ms);
    reuse.push_back(frdiff_sample(trained, default_schedule(), cfg, KeyframeSet::uniform(50, 3), {}).wallclock_ms);
  }
  const double m1 = median(full), m3 = median(reuse);
  o.require(m3 < m1, "wall-clock M=3 below M=1");
  o.detail << grids << " (N, M) schedules reconcile; median wall-clock M=1 " << m1 << " ms, M=3 " << m3
           << " ms";
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s <checkpoint-dir>\n", argv[0]);
    return 2;
  }
  ScoreNetwork trained = [&] {
    try {
      return load_checkpoint(argv[1]);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "cannot load checkpoint: %s\n", e.what());
      std::exit(2);
    }
  }();

  struct Criterion {
    const char* name;
    std::function<void(Outcome&)> run;
  };
  const std::vector<Criterion> criteria = {
      {"baseline identity", [&](Outcome& o) { baseline_identity(trained, o); }},
      {"reduced-NFE equivalence", [&](Outcome& o) { reduced_nfe(trained, o); }},
      {"gradient suite", [&](Outcome& o) { gradient_suite(trained, o); }},
      {"mixing schedule", [&](Outcome& o) { mixing_schedule(o); }},
      {"cost model", [&](Outcome& o) { cost_model(o); }},
      {"split identity", [&](Outcome& o) { split_identity(trained, o); }},
      {"auto-FR sweep", [&](Outcome& o) { autofr_sweep(trained, o); }},
      {"spectral ordering", [&](Outcome& o) { spectral_ordering(trained, o); }},
      {"cost ledger audit", [&](Outcome& o) { ledger_audit(trained, o); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      criteria[i].run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << "exception: " << e.what();
    }
    failed += !o.pass;
    std::printf("[%s] %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name,
                o.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%zu of %zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed ? 1 : 0;
}
