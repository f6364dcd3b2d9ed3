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


// Run drivers behind the command-line front end: probe a configured game
// into an archive, then derive metric and comparison CSVs from archives.

#ifndef MOI_RUN_HPP_
#define MOI_RUN_HPP_

#include <sys/file.h>
#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "moi/archive.hpp"
#include "moi/bridge.hpp"
#include "moi/cache.hpp"
#include "moi/config.hpp"
#include "moi/csv.hpp"
#include "moi/error.hpp"
#include "moi/image_game.hpp"
#include "moi/interaction.hpp"
#include "moi/metrics.hpp"
#include "moi/synthetic.hpp"
#include "moi/tensor.hpp"
#include "moi/wire.hpp"

#ifndef MOI_VERSION
#define MOI_VERSION "0.0.0"
#endif

namespace moi {

inline constexpr const char* kEngineVersion = MOI_VERSION;

// ---------------------------------------------------------------------------
// Samples

/// Builds the per-sample games a config describes.
class SampleFactory {
 public:
  explicit SampleFactory(const RunConfig& config) : config_(config), n_(config_players(config)) {
    switch (config.source) {
      case GameSource::kSynthetic:
        for (int k = 0; k < config.synthetic.samples; ++k) ids_.push_back("s" + std::to_string(k));
        break;
      case GameSource::kImage:
        init_image();
        break;
      case GameSource::kBridge:
        init_bridge();
        break;
    }
  }

  int num_players() const { return n_; }
  std::size_t size() const { return ids_.size(); }
  const std::string& id(std::size_t k) const { return ids_[k]; }

  std::string score_kind() const {
    switch (config_.source) {
      case GameSource::kSynthetic: return "synthetic";
      case GameSource::kImage: return std::string(to_string(config_.image.score_kind));
      case GameSource::kBridge: return std::string(to_string(session_->server().score_kind));
    }
    return "unknown";
  }

  std::unique_ptr<GameEvaluator> make(std::size_t k) const {
    switch (config_.source) {
      case GameSource::kSynthetic:
        return make_synthetic(config_.synthetic.spec, sample_seed(config_.seed, k));
      case GameSource::kImage: {
        const Tensor x = image_input(k);
        BaselinePolicy baseline{config_.image.baseline, config_.image.baseline_values, reference_};
        return make_image_game(x, scorer_, partition(x, config_.image.grid, config_.image.pad), baseline);
      }
      case GameSource::kBridge:
        return std::make_unique<RemoteGame>(session_, n_, ids_[k]);
    }
    return nullptr;
  }

  static std::uint64_t sample_seed(std::uint64_t seed, std::size_t k) { return hash_combine(seed, k); }

 private:
  void init_image() {
    const auto& im = config_.image;
    for (const auto& path : im.inputs) {
      std::string id = std::filesystem::path(path).stem().string();
      for (auto& ch : id) {
        if (!valid_sample_id(std::string(1, ch))) ch = '_';
      }
      if (id.empty()) id = "input";
      const auto base = id;
      for (int suffix = 1; std::find(ids_.begin(), ids_.end(), id) != ids_.end(); ++suffix) {
        id = base + "_" + std::to_string(suffix);
      }
      ids_.push_back(id);
      inputs_.push_back(read_tensor(path));
    }
    for (int k = 0; k < im.generate; ++k) ids_.push_back("gen" + std::to_string(k));
    if (!im.reference.empty()) reference_ = std::make_shared<const Tensor>(read_tensor(im.reference));

    const Tensor first = image_input(0);
    for (std::size_t k = 1; k < inputs_.size(); ++k) {
      if (!inputs_[k].same_shape(first)) fail(ErrorCode::kShapeMismatch, "input tensors differ in shape");
    }
    if (im.generate > 0 && !inputs_.empty() &&
        (im.channels != first.channels || im.height != first.height || im.width != first.width)) {
      fail(ErrorCode::kShapeMismatch, "generated image shape differs from the input tensors");
    }
    const auto size = static_cast<int>(first.size());
    switch (im.scorer.kind) {
      case ScorerKind::kBuiltin:
        scorer_ = std::make_shared<MlpScorer>(im.scorer.seed, size, im.scorer.hidden);
        break;
      case ScorerKind::kLinear: {
        auto w = im.scorer.weights;
        if (w.empty()) {
          SplitMix64 rng(hash_combine(im.scorer.seed, 0x6c696eULL));
          w.resize(first.size());
          for (auto& v : w) v = rng.uniform(-1.0, 1.0);
        }
        scorer_ = std::make_shared<LinearScorer>(std::move(w), im.scorer.bias);
        break;
      }
      case ScorerKind::kConstant:
        scorer_ = std::make_shared<ConstantScorer>(im.scorer.value);
        break;
      case ScorerKind::kRemote: {
        auto bc = im.scorer.bridge;
        apply_env_overrides(bc);
        scorer_ = std::make_shared<RemoteTensorScorer>(BridgeSession::connect(bc), im.target);
        break;
      }
    }
  }

  void init_bridge() {
    auto bc = config_.bridge.bridge;
    apply_env_overrides(bc);
    session_ = BridgeSession::connect(bc);
    if (session_->server().n != n_) {
      fail(ErrorCode::kHandshakeMismatch, "server has n=" + std::to_string(session_->server().n) +
                                              ", config has n=" + std::to_string(n_));
    }
    ids_ = config_.bridge.input_refs.empty() ? session_->server().input_refs : config_.bridge.input_refs;
    if (ids_.empty()) fail(ErrorCode::kHandshakeMismatch, "server lists no input_refs");
    for (const auto& id : ids_) {
      if (!valid_sample_id(id)) fail(ErrorCode::kInvalidArgument, "input_ref '" + id + "' is not a valid sample id");
    }
  }

  Tensor image_input(std::size_t k) const {
    if (k < inputs_.size()) return inputs_[k];
    const auto& im = config_.image;
    return seeded_image(sample_seed(config_.seed, k), im.channels, im.height, im.width);
  }

  const RunConfig& config_;
  int n_;
  std::vector<std::string> ids_;
  std::vector<Tensor> inputs_;
  std::shared_ptr<const Tensor> reference_;
  std::shared_ptr<ModelScorer> scorer_;
  std::shared_ptr<BridgeSession> session_;
};

inline std::vector<int> plan_orders(const RunConfig& c) {
  const int n = config_players(c);
  if (c.plan.orders_preset == "all") return all_orders(n);
  if (c.plan.orders_preset == "default") return default_orders(n);
  SamplingPlan p;
  p.orders = c.plan.orders;
  return resolve_orders(n, p, c.plan.mode);
}

/// One sample's record: pair profiles plus v(N) and v(empty).
inline SampleRecord probe_sample(CachedGame& game, const RunConfig& c, std::size_t k, const std::string& id) {
  const int n = game.num_players();
  const auto pairs = c.pairs.all ? all_pairs(n) : sample_pairs(n, c.pairs.count, c.seed, k);
  SamplingPlan plan;
  plan.orders = plan_orders(c);
  plan.contexts_per_order = c.plan.contexts_per_order;
  plan.seed = SampleFactory::sample_seed(c.seed, k);
  ProfileOptions options;
  options.workers = c.workers;
  options.retain_deltas = c.retain_deltas;

  SampleRecord r;
  r.sample_id = id;
  r.profiles = profile_pairs(game, pairs, plan, c.plan.mode, options);
  const std::vector<Coalition> ends{Coalition::full(n), Coalition(n)};
  const auto v = game.evaluate_batch(ends);
  r.v_full = v[0];
  r.v_empty = v[1];
  return r;
}

// ---------------------------------------------------------------------------
// Output directory ownership

/// Exclusive advisory lock on `<root>/.lock`, released on destruction or
/// process exit.
class RunLock {
 public:
  explicit RunLock(const std::filesystem::path& path) {
    fd_.reset(::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644));
    if (!fd_) fail(ErrorCode::kIoError, "cannot open lock file " + path.string());
    if (::flock(fd_.get(), LOCK_EX | LOCK_NB) != 0) {
      fail(ErrorCode::kIoError, "another run is using " + path.parent_path().string());
    }
    const std::string pid = std::to_string(::getpid()) + "\n";
    if (::ftruncate(fd_.get(), 0) == 0) (void)!::write(fd_.get(), pid.data(), pid.size());
  }

 private:
  wire::UniqueFd fd_;
};

// ---------------------------------------------------------------------------
// probe

struct ProbeOptions {
  bool resume = false;  // keep finished samples of an earlier run with the same config
  bool force = false;   // discard an earlier run
  int stop_after = -1;  // compute at most this many samples, then leave the run partial
  std::ostream* log = nullptr;
};

struct ProbeResult {
  std::size_t samples_total = 0;
  std::size_t computed = 0;
  std::size_t skipped = 0;
  bool complete = false;
  CacheStats stats;
  double seconds = 0.0;
};

inline void write_metric_files(const ArchiveLayout& layout, const RunConfig& c);

inline ProbeResult run_probe(const RunConfig& config, const ProbeOptions& options = {}) {
  namespace fs = std::filesystem;
  validate_config(config);
  const auto started = std::chrono::steady_clock::now();
  const ArchiveLayout layout{config.output};
  fs::create_directories(layout.root);
  RunLock lock(layout.lock_path());

  const std::string digest = config_digest(config);
  const bool has_records = fs::exists(layout.records_dir()) && !record_files(layout.records_dir()).empty();
  const bool has_run = has_records || fs::exists(layout.manifest_path()) || fs::exists(layout.partial_marker());
  if (has_run && options.force) {
    fs::remove_all(layout.records_dir());
    fs::remove_all(layout.root / "metrics");
    fs::remove(layout.partial_marker());
    fs::remove(layout.manifest_path());
  } else if (has_run && !options.resume) {
    fail(ErrorCode::kInvalidArgument,
         layout.root.string() + " already holds a run (use --resume to continue it or --force to replace it)");
  } else if (has_run && options.resume && fs::exists(layout.config_path())) {
    const auto previous = load_config(layout.config_path());
    if (config_digest(previous) != digest) {
      fail(ErrorCode::kConfigError, "cannot resume: " + layout.config_path().string() + " describes a different run");
    }
  }
  fs::create_directories(layout.records_dir());
  write_file_atomic(layout.config_path(), serialize_config(config));
  write_file_atomic(layout.partial_marker(), "run " + digest + " in progress\n");

  SampleFactory factory(config);
  auto cache = std::make_shared<EvalCache>();
  ProbeResult result;
  result.samples_total = factory.size();
  std::size_t recorded = 0;
  for (std::size_t k = 0; k < factory.size(); ++k) {
    const auto path = layout.record_path(k);
    if (fs::exists(path)) {
      const auto existing = read_record_file(path);
      if (existing.record.sample_id != factory.id(k) || existing.n != factory.num_players()) {
        fail(ErrorCode::kFormatError, path.string() + " does not belong to this run");
      }
      ++result.skipped;
      ++recorded;
      continue;
    }
    if (options.stop_after >= 0 && result.computed >= static_cast<std::size_t>(options.stop_after)) continue;
    auto game = factory.make(k);
    CachedGame cached(*game, cache);
    const auto record = probe_sample(cached, config, k, factory.id(k));
    write_file_atomic(path, record_text(record, factory.num_players(), config.retain_deltas));
    const auto s = cached.stats();
    result.stats.requests += s.requests;
    result.stats.hits += s.hits;
    result.stats.dispatched += s.dispatched;
    result.stats.batches += s.batches;
    ++result.computed;
    ++recorded;
    if (options.log) *options.log << "sample " << factory.id(k) << " (" << recorded << "/" << factory.size() << ")\n";
  }
  result.complete = recorded == factory.size();
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  if (result.complete) {
    fs::remove(layout.partial_marker());
    write_metric_files(layout, config);
  }

  nlohmann::json manifest{
      {"format", "moi-manifest"},
      {"engine_version", kEngineVersion},
      {"config_digest", digest},
      {"complete", result.complete},
      {"n", factory.num_players()},
      {"score_kind", factory.score_kind()},
      {"orders", plan_orders(config)},
      {"samples", {{"total", result.samples_total}, {"computed", result.computed}, {"reused", result.skipped}}},
      {"workers", config.workers},
      {"timing", {{"wall_seconds", result.seconds}}},
      {"evaluator",
       {{"requests", result.stats.requests},
        {"cache_hits", result.stats.hits},
        {"calls", result.stats.dispatched},
        {"batches", result.stats.batches},
        {"cache_hit_rate", result.stats.hit_rate()}}},
  };
  write_file_atomic(layout.manifest_path(), manifest.dump(2) + "\n");
  return result;
}

// ---------------------------------------------------------------------------
// metrics / compare

inline constexpr std::string_view kEtaCsvHeader = "order,value,stderr,kind,sample";

/// CSV for one metric over an archive. `eta` has one row per sample, with
/// the sample id in an extra trailing column.
inline std::string metrics_csv(const SampleRecordSet& records, MetricKind kind) {
  if (kind == MetricKind::kDelta) {
    fail(ErrorCode::kInvalidArgument, "delta compares two archives; use compare --metric delta");
  }
  if (kind == MetricKind::kEta) {
    std::ostringstream os;
    os << kEtaCsvHeader << "\n";
    const int m = eta_order(records.n);
    for (const auto& s : records.samples) {
      os << m << "," << format_double(eta(s, records.n)) << ",," << to_string(kind) << "," << s.sample_id << "\n";
    }
    return os.str();
  }
  return profile_csv(metric_profile(records, kind));
}

/// Per-order A - B. For `delta`, |F_A - F_B| of the normalized strengths.
inline std::string compare_csv(const SampleRecordSet& a, const SampleRecordSet& b, MetricKind kind) {
  if (kind == MetricKind::kEta) fail(ErrorCode::kInvalidArgument, "eta is per sample and has no order profile");
  if (kind == MetricKind::kDelta) {
    if (a.n != b.n || a.order_grid() != b.order_grid()) {
      fail(ErrorCode::kOrderGridMismatch, "record sets use different order grids");
    }
    return profile_csv(flexibility_delta(normalized_strength(a), normalized_strength(b)));
  }
  return profile_csv(compare_sets(a, b, kind), "diff-" + std::string(to_string(kind)));
}

inline std::vector<std::size_t> degenerate_orders(const SampleRecordSet& records, MetricKind kind) {
  std::vector<std::size_t> out;
  if (kind == MetricKind::kEta || kind == MetricKind::kDelta) return out;
  const auto p = metric_profile(records, kind);
  for (std::size_t k = 0; k < p.degenerate.size(); ++k) {
    if (p.degenerate[k]) out.push_back(static_cast<std::size_t>(p.orders[k]));
  }
  return out;
}

/// Metric CSVs requested by the config, under <root>/metrics/.
inline void write_metric_files(const ArchiveLayout& layout, const RunConfig& c) {
  if (c.metrics.empty()) return;
  const auto dir = layout.root / "metrics";
  std::filesystem::create_directories(dir);
  const auto records = read_archive(layout.root, true);
  for (auto kind : c.metrics) {
    write_file_atomic(dir / (std::string(to_string(kind)) + ".csv"), metrics_csv(records, kind));
  }
}

}  // namespace moi

#endif  // MOI_RUN_HPP_
