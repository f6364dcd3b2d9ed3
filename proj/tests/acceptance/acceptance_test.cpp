// Copyright 2026 The moi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Acceptance run. Each check prints one PASS or FAIL line; lines starting
// with INFO are context and do not count. Exit status is nonzero when any
// check fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "moi/archive.hpp"
#include "moi/config.hpp"
#include "moi/interaction.hpp"
#include "moi/metrics.hpp"
#include "moi/run.hpp"
#include "moi/selfcheck.hpp"
#include "moi/shapley.hpp"
#include "moi/synthetic.hpp"
#include "oracle.hpp"

namespace fs = std::filesystem;
using namespace moi;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(double x, int precision = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, x);
  return buf;
}

struct Outcome {
  bool passed = false;
  std::string detail;
};

SampleRecordSet exact_records(GameEvaluator& game, bool deltas = false) {
  const int n = game.num_players();
  const auto pairs = all_pairs(n);
  ProfileOptions options;
  options.retain_deltas = deltas;
  SampleRecord r;
  r.sample_id = "s0";
  r.profiles = profile_pairs(game, pairs, SamplingPlan{}, ProfileMode::kExact, options);
  r.v_full = game.evaluate(Coalition::full(n));
  r.v_empty = game.evaluate(Coalition(n));
  return {n, {r}};
}

// ---------------------------------------------------------------------------

Outcome property_suite() {
  const auto started = Clock::now();
  SelfcheckOptions options;
  options.sizes = {4, 6, 8};
  options.tables_per_size = 50;
  const auto report = run_selfcheck(options);
  const double elapsed = seconds_since(started);

  // Independent route: engine Shapley values and interaction indices
  // against brute-force factorial sums on the raw tables.
  double oracle_dev = 0;
  for (int n : options.sizes) {
    for (int t = 0; t < 10; ++t) {
      auto game = TableGame::random(n, hash_combine(777, static_cast<std::uint64_t>(n * 100 + t)));
      const auto& v = game.table();
      const auto phi = shapley_values_exact(game);
      for (int i = 0; i < n; ++i) oracle_dev = std::max(oracle_dev, std::abs(phi[i] - oracle::shapley(v, n, i)));
      const auto rec = exact_records(game);
      for (const auto& p : rec.samples[0].profiles) {
        oracle_dev = std::max(oracle_dev, std::abs(interaction_index(p) - oracle::interaction_index(v, n, p.i, p.j)));
      }
    }
  }

  double worst = 0;
  std::string names;
  for (const auto& p : report.properties) {
    worst = std::max(worst, p.max_deviation);
    if (!p.passed) names += " " + p.name;
  }
  Outcome o;
  o.passed = report.passed() && worst <= 1e-9 && oracle_dev <= 1e-9 && elapsed < 30.0;
  o.detail = std::to_string(report.tables) + " tables, max deviation " + fmt(worst) + ", oracle deviation " +
             fmt(oracle_dev) + ", " + fmt(elapsed) + " s" + (names.empty() ? "" : ", failing:" + names);
  return o;
}

Outcome sampled_matches_exact() {
  constexpr int n = 12;
  constexpr int trials = 100;
  constexpr int contexts = 30;  // below C(10, m) for every tested m, so sampling is real
  std::string detail;
  bool ok = true;
  for (int m : {2, 5, 8}) {
    int within = 0;
    for (int t = 0; t < trials; ++t) {
      const std::uint64_t seed = hash_combine(0xacce, static_cast<std::uint64_t>(m * 1000 + t));
      auto game = TableGame::random(n, seed);
      SplitMix64 rng(seed);
      const int i = static_cast<int>(rng.below(n));
      int j = static_cast<int>(rng.below(n - 1));
      if (j >= i) ++j;
      SamplingPlan plan;
      plan.orders = {m};
      plan.contexts_per_order = contexts;
      plan.seed = hash_combine(seed, 1);
      const std::vector<PlayerPair> pair{{i, j}};
      const auto est = profile_pairs(game, pair, plan, ProfileMode::kSampled)[0].values[0];
      const double truth = oracle::order_interaction(game.table(), n, i, j, m);
      if (est.exact) ok = false;
      if (std::abs(est.mean - truth) <= 3.0 * est.std_error) ++within;
    }
    ok = ok && within >= 95;
    detail += "m=" + std::to_string(m) + " " + std::to_string(within) + "/100, ";
  }

  // Convergence rate at n = 20, m = 9 (C(18, 9) = 48620 contexts).
  constexpr int big_n = 20, order = 9, reps = 60;
  auto game = TableGame::random(big_n, 0x5107e);
  const int i = 3, j = 11;
  const double truth = oracle::order_interaction(game.table(), big_n, i, j, order);
  std::vector<double> log_k, log_se, log_rmse;
  for (int k : {100, 1000, 10000}) {
    double se_sum = 0, sq_sum = 0;
    for (int r = 0; r < reps; ++r) {
      SamplingPlan plan;
      plan.orders = {order};
      plan.contexts_per_order = k;
      plan.seed = hash_combine(0x51, static_cast<std::uint64_t>(k * 1000 + r));
      const std::vector<PlayerPair> pair{{i, j}};
      const auto est = profile_pairs(game, pair, plan, ProfileMode::kSampled)[0].values[0];
      se_sum += est.std_error;
      sq_sum += (est.mean - truth) * (est.mean - truth);
    }
    log_k.push_back(std::log(k));
    log_se.push_back(std::log(se_sum / reps));
    log_rmse.push_back(std::log(std::sqrt(sq_sum / reps)));
  }
  auto slope = [&](const std::vector<double>& y) {
    const double mx = (log_k[0] + log_k[1] + log_k[2]) / 3, my = (y[0] + y[1] + y[2]) / 3;
    double num = 0, den = 0;
    for (int k = 0; k < 3; ++k) {
      num += (log_k[k] - mx) * (y[k] - my);
      den += (log_k[k] - mx) * (log_k[k] - mx);
    }
    return num / den;
  };
  const double se_slope = slope(log_se), rmse_slope = slope(log_rmse);
  ok = ok && std::abs(se_slope + 0.5) <= 0.1 && std::abs(rmse_slope + 0.5) <= 0.1;
  detail += "stderr slope " + fmt(se_slope) + ", rmse slope " + fmt(rmse_slope);
  return {ok, detail};
}

Outcome analytic_games() {
  constexpr int n = 10;
  constexpr double c = 1.75;
  bool ok = true;
  double worst = 0;
  auto track = [&](double dev) {
    worst = std::max(worst, std::abs(dev));
    if (std::abs(dev) > 1e-9) ok = false;
  };

  SyntheticSpec spec;
  spec.n = n;
  spec.kind = SyntheticKind::kAdditive;
  auto additive = make_synthetic(spec, 3);
  const auto additive_rec = exact_records(*additive);
  for (const auto& p : additive_rec.samples[0].profiles) {
    for (const auto& e : p.values) track(e.mean);
  }

  spec.kind = SyntheticKind::kPairAnd;
  spec.i = 2;
  spec.j = 7;
  spec.value = c;
  auto pair_and = make_synthetic(spec, 0);
  const auto pair_and_rec = exact_records(*pair_and);
  for (const auto& p : pair_and_rec.samples[0].profiles) {
    const bool target = p.i == 2 && p.j == 7;
    for (const auto& e : p.values) track(e.mean - (target ? c : 0.0));
    track(interaction_index(p) - (target ? c : 0.0));
  }

  spec.kind = SyntheticKind::kFullCoalition;
  auto full = make_synthetic(spec, 0);
  bool top_nonzero = true;
  const auto full_rec = exact_records(*full);
  for (const auto& p : full_rec.samples[0].profiles) {
    if (!p.complete()) ok = false;
    for (const auto& e : p.values) {
      if (e.m < n - 2) {
        track(e.mean);
      } else if (std::abs(e.mean) <= 1e-9) {
        top_nonzero = false;
      }
    }
  }
  ok = ok && top_nonzero;
  return {ok, "n=" + std::to_string(n) + ", max deviation " + fmt(worst) +
                  (top_nonzero ? ", top order nonzero" : ", top order zero")};
}

// Random record sets with mixed signs, zeros and retained deltas.
SampleRecordSet fuzz_records(SplitMix64& rng) {
  const int n = 4 + static_cast<int>(rng.below(12));
  const int orders = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 1)));
  SampleRecordSet set{n, {}};
  const int samples = 1 + static_cast<int>(rng.below(3));
  for (int s = 0; s < samples; ++s) {
    SampleRecord r;
    r.sample_id = "f" + std::to_string(s);
    const int pairs = 1 + static_cast<int>(rng.below(5));
    for (int p = 0; p < pairs; ++p) {
      InteractionProfile prof{n, 0, 1 + p % (n - 1), {}};
      for (int m = 0; m < orders; ++m) {
        PairOrderEstimate e;
        e.i = prof.i;
        e.j = prof.j;
        e.m = m;
        const int k = 1 + static_cast<int>(rng.below(6));
        const int style = static_cast<int>(rng.below(4));
        for (int d = 0; d < k; ++d) {
          double x = rng.uniform(-1, 1) * std::pow(10.0, rng.uniform(-3, 3));
          if (style == 0) x = 0;
          if (style == 1) x = std::abs(x);
          e.deltas.push_back(x);
        }
        e.contexts_used = e.deltas.size();
        e.mean = compensated_mean(e.deltas);
        prof.values.push_back(e);
      }
      r.profiles.push_back(prof);
    }
    set.samples.push_back(r);
  }
  return set;
}

Outcome metric_identities() {
  bool ok = true;
  std::string detail;

  // Normalized strength averages to one.
  double f_dev = 0;
  for (int t = 0; t < 20; ++t) {
    auto game = TableGame::random(7, hash_combine(0xf00, t));
    const auto f = normalized_strength(exact_records(game));
    f_dev = std::max(f_dev, std::abs(f.mean() - 1.0));
  }
  ok = ok && f_dev <= 1e-12;
  detail += "mean F - 1 " + fmt(f_dev);

  // Purity and disentanglement stay in [0, 1]; the unclamped ratios are
  // recomputed here so clamping cannot hide a violation.
  SplitMix64 rng(0xf022);
  int violations = 0;
  for (int t = 0; t < 10000; ++t) {
    const auto set = fuzz_records(rng);
    for (auto kind : {MetricKind::kPurity, MetricKind::kDisentanglement}) {
      for (double v : metric_profile(set, kind).values) {
        if (!(v >= 0.0 && v <= 1.0)) ++violations;
      }
    }
    for (int m : set.order_grid()) {
      double pos = 0, absum = 0, dnum = 0, dden = 0;
      for (const auto& s : set.samples) {
        double sp = 0, sa = 0, sn = 0, sd = 0;
        for (const auto& p : s.profiles) {
          const auto* e = p.at_order(m);
          sp += std::max(e->mean, 0.0);
          sa += std::abs(e->mean);
          double sum = 0, abs_sum = 0;
          for (double d : e->deltas) {
            sum += d;
            abs_sum += std::abs(d);
          }
          sn += std::abs(sum);
          sd += abs_sum;
        }
        pos += sp;
        absum += sa;
        dnum += sn;
        dden += sd;
      }
      if (pos > absum * (1 + 1e-12) || dnum > dden * (1 + 1e-12)) ++violations;
    }
  }
  ok = ok && violations == 0;
  detail += ", fuzz violations " + std::to_string(violations) + "/10000 sets";

  // Positive scaling.
  double scale_dev = 0;
  auto base = TableGame::random(8, 0x5ca1e);
  const auto ref = exact_records(base, true);
  for (double a : {1e-3, 0.37, 12.5, 4e4}) {
    LinearCombinationGame scaled(a, base, 0.0, base);
    const auto rec = exact_records(scaled, true);
    auto diff = [&](MetricKind kind) {
      const auto x = metric_profile(ref, kind), y = metric_profile(rec, kind);
      for (std::size_t k = 0; k < x.values.size(); ++k) scale_dev = std::max(scale_dev, std::abs(x.values[k] - y.values[k]));
    };
    diff(MetricKind::kNormalized);
    diff(MetricKind::kDisentanglement);
    diff(MetricKind::kPurity);
    const double e1 = eta(ref.samples[0], 8), e2 = eta(rec.samples[0], 8);
    scale_dev = std::max(scale_dev, std::abs(e1 - e2) / std::max(1.0, std::abs(e1)));
  }
  ok = ok && scale_dev <= 1e-12;
  detail += ", scaling deviation " + fmt(scale_dev);

  // All-positive signed-context game.
  SignedContextGame positive(8, 1, 5, std::vector<double>(std::size_t{1} << 6, 1.0));
  const auto rec = exact_records(positive, true);
  double d_min = 1, d_max = 1;
  for (int m = 0; m <= 6; ++m) {
    SampleRecordSet one{8, {SampleRecord{"s0", 0, 0, {}}}};
    for (const auto& p : rec.samples[0].profiles) {
      if (p.i == 1 && p.j == 5) one.samples[0].profiles.push_back(p);
    }
    const auto d = disentanglement(one, m);
    d_min = std::min(d_min, d.value);
    d_max = std::max(d_max, d.value);
    if (d.degenerate) ok = false;
  }
  ok = ok && d_min == 1.0 && d_max == 1.0;
  detail += ", signed-context D in [" + fmt(d_min, 17) + ", " + fmt(d_max, 17) + "]";
  return {ok, detail};
}

// min(1, number of adjacent pairs present): a local game that saturates.
class SaturatingLocalPairs final : public PointwiseGame {
 public:
  explicit SaturatingLocalPairs(int g) : PointwiseGame(g * g), inner_(g, 1.0) {}
  double value(const Coalition& s) const override { return std::min(1.0, inner_.value(s)); }
  std::string descriptor() const override { return "saturating_" + inner_.descriptor(); }

 private:
  LocalPairsGame inner_;
};

double lower_half_share(const OrderProfile& f) {
  double lower = 0, total = 0;
  const int half = static_cast<int>(f.orders.size()) / 2;
  for (std::size_t k = 0; k < f.values.size(); ++k) {
    total += f.values[k];
    if (static_cast<int>(k) < half) lower += f.values[k];
  }
  return lower / total;
}

std::vector<Outcome> shape_checks() {
  std::vector<Outcome> out;
  LocalPairsGame local(3, 1.0);
  const auto local_rec = exact_records(local);
  const double share = lower_half_share(normalized_strength(local_rec));
  out.push_back({share > 0.8, "local-pairs lower-half share of F " + fmt(share) + " (needs > 0.8)"});

  SyntheticSpec spec;
  spec.kind = SyntheticKind::kFullCoalition;
  spec.n = 9;
  auto full = make_synthetic(spec, 0);
  const auto full_rec = exact_records(*full);
  const auto f = normalized_strength(full_rec);
  double total = 0;
  for (double v : f.values) total += v;
  const double top = f.values.back() / total;
  out.push_back({top > 0.9, "full-coalition top-order share of F " + fmt(top)});

  const auto diff = compare_sets(full_rec, local_rec, MetricKind::kAverage);
  const int n = 9;
  // Top orders: the upper fifth of the order range [0, n-2].
  bool shape = diff.values.back() > 0;
  std::string positive;
  for (std::size_t k = 0; k < diff.values.size(); ++k) {
    if (diff.values[k] <= 0) continue;
    positive += " " + std::to_string(diff.orders[k]);
    if (diff.orders[k] <= 0.8 * (n - 2)) shape = false;
  }
  out.push_back({shape, "avg(full-coalition) - avg(local-pairs) positive at orders" + positive});
  return out;
}

double saturating_share() {
  SaturatingLocalPairs game(3);
  return lower_half_share(normalized_strength(exact_records(game)));
}

RunConfig grid_config(const fs::path& out) {
  RunConfig c;
  c.seed = 1024;
  c.source = GameSource::kImage;
  c.image.generate = 1;
  c.image.channels = 3;
  c.image.height = 32;
  c.image.width = 32;
  c.image.grid = 32;
  c.image.scorer.kind = ScorerKind::kBuiltin;
  c.image.scorer.seed = 9;
  c.plan.mode = ProfileMode::kSampled;
  c.plan.orders_preset = "default";
  c.plan.contexts_per_order = 100;
  c.pairs.count = 50;
  c.metrics = {MetricKind::kStrength, MetricKind::kNormalized, MetricKind::kAverage, MetricKind::kEta};
  c.workers = 1;
  c.output = out.string();
  return c;
}

Outcome grid_regime(const fs::path& workdir) {
  const auto cfg = grid_config(workdir / "grid1024");
  ProbeOptions options;
  options.force = true;
  const auto started = Clock::now();
  const auto result = run_probe(cfg, options);
  const double elapsed = seconds_since(started);

  std::ifstream in(ArchiveLayout{cfg.output}.manifest_path());
  const auto manifest = nlohmann::json::parse(in);
  const bool has_rate = manifest.contains("evaluator") && manifest["evaluator"].contains("cache_hit_rate");
  const auto set = read_archive(cfg.output);
  const auto& profiles = set.samples.at(0).profiles;
  const std::size_t orders = profiles.at(0).values.size();
  bool shape = set.n == 1024 && profiles.size() == 50 && orders == 18;
  for (const auto& p : profiles) {
    for (const auto& e : p.values) shape = shape && e.contexts_used == 100 && !e.exact;
  }
  Outcome o;
  o.passed = result.complete && shape && has_rate && elapsed < 600.0;
  o.detail = "n=" + std::to_string(set.n) + ", " + std::to_string(profiles.size()) + " pairs x " +
             std::to_string(orders) + " orders x 100 contexts in " + fmt(elapsed) + " s, cache hit rate " +
             (has_rate ? fmt(manifest["evaluator"]["cache_hit_rate"].get<double>()) : std::string("missing"));
  return o;
}

std::map<std::string, std::string> run_files(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), root).string();
    if (rel == "manifest.json" || rel == ".lock" || rel == "config.resolved.yaml") continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    files[rel] = ss.str();
  }
  return files;
}

Outcome determinism(const fs::path& workdir) {
  std::vector<RunConfig> configs;
  RunConfig table;
  table.seed = 31;
  table.synthetic.spec.kind = SyntheticKind::kTable;
  table.synthetic.spec.n = 14;
  table.synthetic.samples = 6;
  table.plan.contexts_per_order = 40;
  table.pairs.count = 20;
  table.metrics = {MetricKind::kStrength, MetricKind::kNormalized, MetricKind::kAverage, MetricKind::kPurity,
                   MetricKind::kDisentanglement, MetricKind::kEta};
  table.retain_deltas = true;
  configs.push_back(table);

  RunConfig image = grid_config("");
  image.image.generate = 3;
  image.image.grid = 8;
  image.plan.contexts_per_order = 20;
  image.pairs.count = 10;
  configs.push_back(image);

  bool ok = true;
  std::size_t compared = 0;
  for (std::size_t k = 0; k < configs.size(); ++k) {
    std::map<std::string, std::string> first;
    for (int workers : {1, 8, 1}) {
      auto c = configs[k];
      c.workers = workers;
      c.output = (workdir / ("det" + std::to_string(k) + "_w" + std::to_string(workers))).string();
      ProbeOptions options;
      options.force = true;
      run_probe(c, options);
      auto files = run_files(c.output);
      if (first.empty()) {
        first = std::move(files);
      } else {
        ok = ok && files == first;
      }
    }
    compared += first.size();
  }
  return {ok, std::to_string(compared) + " archive and CSV files identical across 1 and 8 workers"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"moi acceptance checks"};
  std::string workdir = (fs::temp_directory_path() / "moi_acceptance").string();
  app.add_option("--workdir", workdir, "Scratch directory for runs");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(workdir);

  int failures = 0;
  auto report = [&](const std::string& name, const Outcome& o) {
    std::printf("%s %s: %s\n", o.passed ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    if (!o.passed) ++failures;
  };
  auto guarded = [&](const std::string& name, const std::function<Outcome()>& check) {
    try {
      report(name, check());
    } catch (const std::exception& e) {
      report(name, {false, std::string("threw ") + e.what()});
    }
  };

  guarded("property-suite", property_suite);
  guarded("sampled-vs-exact", sampled_matches_exact);
  guarded("analytic-games", analytic_games);
  guarded("metric-identities", metric_identities);
  try {
    const auto shapes = shape_checks();
    report("shape-local-pairs", shapes[0]);
    report("shape-full-coalition", shapes[1]);
    report("shape-compare-average", shapes[2]);
    std::printf("INFO saturating local-pairs lower-half share of F %s\n", fmt(saturating_share()).c_str());
  } catch (const std::exception& e) {
    report("shape-checks", {false, std::string("threw ") + e.what()});
  }
  guarded("grid-regime-1024", [&] { return grid_regime(workdir); });
  guarded("determinism", [&] { return determinism(workdir); });

  std::printf("%d check(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
