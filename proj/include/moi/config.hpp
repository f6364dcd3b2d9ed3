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


// Run configuration: a YAML file describing one probe run.
//
// Unknown fields are errors. Every error names the field path and the line
// and column it came from. Serialization writes every field of the active
// game source and drops the inactive ones, so parse(serialize(c)) == c for
// any parsed config.

#ifndef MOI_CONFIG_HPP_
#define MOI_CONFIG_HPP_

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "moi/bridge.hpp"
#include "moi/csv.hpp"
#include "moi/error.hpp"
#include "moi/image_game.hpp"
#include "moi/interaction.hpp"
#include "moi/metrics.hpp"
#include "moi/numeric.hpp"
#include "moi/synthetic.hpp"

namespace moi {

inline constexpr int kConfigVersion = 1;

enum class GameSource { kSynthetic, kImage, kBridge };

constexpr std::string_view to_string(GameSource s) {
  switch (s) {
    case GameSource::kSynthetic: return "synthetic";
    case GameSource::kImage: return "image";
    case GameSource::kBridge: return "bridge";
  }
  return "unknown";
}

struct SyntheticSource {
  SyntheticSpec spec;
  int samples = 1;  // sample k uses seed hash_combine(run seed, k)

  friend bool operator==(const SyntheticSource&, const SyntheticSource&) = default;
};

enum class ScorerKind { kBuiltin, kLinear, kConstant, kRemote };

constexpr std::string_view to_string(ScorerKind k) {
  switch (k) {
    case ScorerKind::kBuiltin: return "builtin";
    case ScorerKind::kLinear: return "linear";
    case ScorerKind::kConstant: return "constant";
    case ScorerKind::kRemote: return "remote";
  }
  return "unknown";
}

struct ScorerConfig {
  ScorerKind kind = ScorerKind::kBuiltin;
  std::uint64_t seed = 0;       // builtin, and linear without weights
  int hidden = kDefaultHiddenWidth;
  std::vector<double> weights;  // linear
  double bias = 0.0;            // linear
  double value = 0.0;           // constant
  BridgeConfig bridge;          // remote: tensor-mode server

  friend bool operator==(const ScorerConfig&, const ScorerConfig&) = default;
};

struct ImageSource {
  std::vector<std::string> inputs;  // tensor files; relative paths resolve against the config file
  int generate = 0;                 // extra seeded images, appended after `inputs`
  int channels = 1;                 // shape of generated images
  int height = 32;
  int width = 32;
  int grid = 32;
  PadPolicy pad = PadPolicy::kAbsorb;
  BaselineMode baseline = BaselineMode::kChannelMean;
  std::vector<double> baseline_values;  // constant baseline
  std::string reference;                // reference baseline tensor file
  ScorerConfig scorer;
  int target = 0;
  ScoreKind score_kind = ScoreKind::kLogit;

  friend bool operator==(const ImageSource&, const ImageSource&) = default;
};

struct BridgeSource {
  BridgeConfig bridge;
  int n = 0;
  std::vector<std::string> input_refs;  // empty: every ref the server lists

  friend bool operator==(const BridgeSource&, const BridgeSource&) = default;
};

struct PlanConfig {
  ProfileMode mode = ProfileMode::kSampled;
  std::string orders_preset = "default";  // "default", "all", or "" for the explicit list
  std::vector<int> orders;
  int contexts_per_order = 100;

  friend bool operator==(const PlanConfig&, const PlanConfig&) = default;
};

struct PairsConfig {
  bool all = false;
  int count = 50;

  friend bool operator==(const PairsConfig&, const PairsConfig&) = default;
};

struct RunConfig {
  int version = kConfigVersion;
  std::uint64_t seed = 0;
  GameSource source = GameSource::kSynthetic;
  SyntheticSource synthetic;
  ImageSource image;
  BridgeSource bridge;
  PlanConfig plan;
  PairsConfig pairs;
  std::vector<MetricKind> metrics;
  bool retain_deltas = false;
  int workers = 1;
  std::string output = "out";

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace detail {

inline std::string where(const YAML::Node& node, const std::string& path) {
  const auto mark = node.Mark();
  if (mark.line < 0) return path;
  return "line " + std::to_string(mark.line + 1) + ", column " + std::to_string(mark.column + 1) + " (" + path + ")";
}

[[noreturn]] inline void config_error(const YAML::Node& node, const std::string& path, const std::string& msg) {
  fail(ErrorCode::kConfigError, where(node, path) + ": " + msg);
}

// A mapping node with the set of keys it may contain.
class MapReader {
 public:
  MapReader(const YAML::Node& node, std::string path, std::initializer_list<std::string_view> allowed)
      : node_(node), path_(std::move(path)) {
    if (!node.IsMap()) config_error(node, path_, "expected a mapping");
    std::set<std::string_view> ok(allowed);
    for (const auto& kv : node) {
      const auto key = kv.first.as<std::string>();
      if (!ok.contains(key)) config_error(kv.first, child_path(key), "unknown field");
    }
  }

  bool has(const char* key) const { return static_cast<bool>(node_[key]); }
  YAML::Node node(const char* key) const { return node_[key]; }
  std::string child_path(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  template <typename T>
  void get(const char* key, T& out) const {
    const auto n = node_[key];
    if (!n) return;
    try {
      out = n.as<T>();
    } catch (const YAML::Exception&) {
      config_error(n, child_path(key), "cannot read value '" + scalar_text(n) + "'");
    }
  }

  template <typename T, typename Parse>
  void get_parsed(const char* key, T& out, Parse&& parse) const {
    const auto n = node_[key];
    if (!n) return;
    try {
      out = parse(n.as<std::string>());
    } catch (const Error& e) {
      config_error(n, child_path(key), e.message());
    } catch (const YAML::Exception&) {
      config_error(n, child_path(key), "expected a string");
    }
  }

 private:
  static std::string scalar_text(const YAML::Node& n) { return n.IsScalar() ? n.Scalar() : "<non-scalar>"; }

  YAML::Node node_;
  std::string path_;
};

inline ProfileMode parse_mode(std::string_view s) {
  if (s == "exact") return ProfileMode::kExact;
  if (s == "sampled") return ProfileMode::kSampled;
  fail(ErrorCode::kConfigError, "unknown mode '" + std::string(s) + "' (exact or sampled)");
}

inline ScorerKind parse_scorer_kind(std::string_view s) {
  for (auto k : {ScorerKind::kBuiltin, ScorerKind::kLinear, ScorerKind::kConstant, ScorerKind::kRemote}) {
    if (to_string(k) == s) return k;
  }
  fail(ErrorCode::kConfigError, "unknown scorer '" + std::string(s) + "'");
}

inline GameSource parse_source(std::string_view s) {
  for (auto k : {GameSource::kSynthetic, GameSource::kImage, GameSource::kBridge}) {
    if (to_string(k) == s) return k;
  }
  fail(ErrorCode::kConfigError, "unknown game source '" + std::string(s) + "'");
}

inline void read_bridge(const MapReader& r, BridgeConfig& b) {
  r.get_parsed("transport", b.transport, parse_transport);
  r.get("address", b.address);
  r.get("command", b.command);
  r.get("input_ref", b.input_ref);
  r.get("batch_size", b.batch_size);
  r.get("timeout", b.timeout);
  r.get("protocol_version", b.protocol_version);
  r.get("pipeline_depth", b.pipeline_depth);
}

#define MOI_BRIDGE_KEYS \
  "transport", "address", "command", "input_ref", "batch_size", "timeout", "protocol_version", "pipeline_depth"

inline void read_scorer(const YAML::Node& node, const std::string& path, ScorerConfig& s) {
  MapReader r(node, path, {"kind", "seed", "hidden", "weights", "bias", "value", "bridge"});
  r.get_parsed("kind", s.kind, parse_scorer_kind);
  r.get("seed", s.seed);
  r.get("hidden", s.hidden);
  r.get("weights", s.weights);
  r.get("bias", s.bias);
  r.get("value", s.value);
  if (r.has("bridge")) read_bridge(MapReader(r.node("bridge"), r.child_path("bridge"), {MOI_BRIDGE_KEYS}), s.bridge);
}

inline void read_game(const YAML::Node& node, RunConfig& c) {
  MapReader r(node, "game", {"source", "synthetic", "image", "bridge"});
  if (!r.has("source")) config_error(node, "game.source", "missing (synthetic, image or bridge)");
  r.get_parsed("source", c.source, parse_source);
  const char* active = to_string(c.source).data();
  for (const char* section : {"synthetic", "image", "bridge"}) {
    if (r.has(section) && std::string_view(section) != active) {
      config_error(r.node(section), r.child_path(section), std::string("section given but game.source is ") + active);
    }
  }

  if (r.has("synthetic")) {
    MapReader s(r.node("synthetic"), "game.synthetic", {"kind", "n", "samples", "weights", "pair", "value", "context_values", "grid"});
    s.get_parsed("kind", c.synthetic.spec.kind, parse_synthetic_kind);
    s.get("n", c.synthetic.spec.n);
    s.get("samples", c.synthetic.samples);
    s.get("weights", c.synthetic.spec.weights);
    s.get("value", c.synthetic.spec.value);
    s.get("context_values", c.synthetic.spec.context_values);
    s.get("grid", c.synthetic.spec.grid);
    if (s.has("pair")) {
      std::vector<int> pair;
      s.get("pair", pair);
      if (pair.size() != 2) config_error(s.node("pair"), "game.synthetic.pair", "expected [i, j]");
      c.synthetic.spec.i = pair[0];
      c.synthetic.spec.j = pair[1];
    }
    if (c.synthetic.spec.kind == SyntheticKind::kLocalPairs && !s.has("n")) {
      c.synthetic.spec.n = c.synthetic.spec.grid * c.synthetic.spec.grid;
    }
  }

  if (r.has("image")) {
    MapReader s(r.node("image"), "game.image",
                {"inputs", "generate", "channels", "height", "width", "grid", "pad", "baseline", "baseline_values",
                 "reference", "scorer", "target", "score_kind"});
    auto& im = c.image;
    s.get("inputs", im.inputs);
    s.get("generate", im.generate);
    s.get("channels", im.channels);
    s.get("height", im.height);
    s.get("width", im.width);
    s.get("grid", im.grid);
    s.get_parsed("pad", im.pad, parse_pad_policy);
    s.get_parsed("baseline", im.baseline, parse_baseline_mode);
    s.get("baseline_values", im.baseline_values);
    s.get("reference", im.reference);
    if (s.has("scorer")) read_scorer(s.node("scorer"), "game.image.scorer", im.scorer);
    s.get("target", im.target);
    s.get_parsed("score_kind", im.score_kind, parse_score_kind);
  }

  if (r.has("bridge")) {
    MapReader s(r.node("bridge"), "game.bridge", {MOI_BRIDGE_KEYS, "n", "input_refs"});
    read_bridge(s, c.bridge.bridge);
    s.get("n", c.bridge.n);
    s.get("input_refs", c.bridge.input_refs);
  }
}

#undef MOI_BRIDGE_KEYS

}  // namespace detail

/// Checks ranges and cross-field constraints. Throws ConfigError.
inline void validate_config(const RunConfig& c) {
  auto bad = [](const std::string& path, const std::string& msg) { fail(ErrorCode::kConfigError, path + ": " + msg); };
  if (c.version != kConfigVersion) bad("version", "unsupported config version " + std::to_string(c.version));
  if (c.workers < 1) bad("workers", "must be >= 1");
  if (c.output.empty()) bad("output", "must not be empty");
  for (auto m : c.metrics) {
    if (m == MetricKind::kDelta) bad("metrics", "delta compares two archives and cannot be requested per run");
    if (m == MetricKind::kDisentanglement && !c.retain_deltas) {
      bad("metrics", "disentanglement needs retain_deltas: true");
    }
  }
  if (c.plan.contexts_per_order < 1) bad("plan.contexts_per_order", "must be >= 1");
  if (!c.pairs.all && c.pairs.count < 1) bad("pairs.count", "must be >= 1");
  if (c.plan.orders_preset != "default" && c.plan.orders_preset != "all" && !c.plan.orders_preset.empty()) {
    bad("plan.orders", "expected 'default', 'all' or a list of orders");
  }
  int n = 0;
  switch (c.source) {
    case GameSource::kSynthetic:
      n = c.synthetic.spec.n;
      if (c.synthetic.samples < 1) bad("game.synthetic.samples", "must be >= 1");
      break;
    case GameSource::kImage: {
      const auto& im = c.image;
      if (im.inputs.empty() && im.generate < 1) bad("game.image", "needs inputs or generate >= 1");
      if (im.generate < 0) bad("game.image.generate", "must be >= 0");
      if (im.grid < 1) bad("game.image.grid", "must be >= 1");
      if (im.generate > 0 && (im.channels < 1 || im.height < 1 || im.width < 1)) {
        bad("game.image", "generated image shape must be positive");
      }
      if (im.baseline == BaselineMode::kConstant && im.baseline_values.empty()) {
        bad("game.image.baseline_values", "constant baseline needs values");
      }
      if (im.baseline == BaselineMode::kReference && im.reference.empty()) {
        bad("game.image.reference", "reference baseline needs a tensor file");
      }
      if (im.scorer.kind == ScorerKind::kRemote) {
        try {
          im.scorer.bridge.validate();
        } catch (const Error& e) {
          bad("game.image.scorer.bridge", e.message());
        }
      }
      n = im.grid * im.grid;
      break;
    }
    case GameSource::kBridge:
      n = c.bridge.n;
      try {
        c.bridge.bridge.validate();
      } catch (const Error& e) {
        bad("game.bridge", e.message());
      }
      for (const auto& ref : c.bridge.input_refs) {
        if (ref.empty()) bad("game.bridge.input_refs", "empty ref");
      }
      break;
  }
  if (n < 2 || n > kMaxPlayers) bad("game", "player count " + std::to_string(n) + " out of range [2, 4096]");
  for (int m : c.plan.orders) {
    if (m < 0 || m > n - 2) bad("plan.orders", "order " + std::to_string(m) + " outside [0, " + std::to_string(n - 2) + "]");
  }
  if (c.plan.orders_preset.empty() && c.plan.orders.empty()) bad("plan.orders", "empty order list");
  const auto max_pairs = static_cast<std::int64_t>(n) * (n - 1) / 2;
  if (!c.pairs.all && c.pairs.count > max_pairs) {
    bad("pairs.count", std::to_string(c.pairs.count) + " exceeds the " + std::to_string(max_pairs) + " distinct pairs");
  }
}

inline int config_players(const RunConfig& c) {
  switch (c.source) {
    case GameSource::kSynthetic: return c.synthetic.spec.n;
    case GameSource::kImage: return c.image.grid * c.image.grid;
    case GameSource::kBridge: return c.bridge.n;
  }
  return 0;
}

inline RunConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    fail(ErrorCode::kConfigError, "line " + std::to_string(e.mark.line + 1) + ", column " +
                                      std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
  RunConfig c;
  detail::MapReader r(root, "", {"version", "seed", "game", "plan", "pairs", "metrics", "retain_deltas", "workers", "output"});
  r.get("version", c.version);
  if (c.version != kConfigVersion) {
    detail::config_error(r.node("version"), "version", "unsupported config version " + std::to_string(c.version));
  }
  r.get("seed", c.seed);
  if (!r.has("game")) detail::config_error(root, "game", "missing");
  detail::read_game(r.node("game"), c);

  if (r.has("plan")) {
    detail::MapReader p(r.node("plan"), "plan", {"mode", "orders", "contexts_per_order"});
    p.get_parsed("mode", c.plan.mode, detail::parse_mode);
    p.get("contexts_per_order", c.plan.contexts_per_order);
    if (p.has("orders")) {
      const auto o = p.node("orders");
      if (o.IsScalar()) {
        c.plan.orders_preset = o.as<std::string>();
        if (c.plan.orders_preset != "default" && c.plan.orders_preset != "all") {
          detail::config_error(o, "plan.orders", "expected 'default', 'all' or a list of orders");
        }
      } else {
        c.plan.orders_preset.clear();
        p.get("orders", c.plan.orders);
      }
    }
  }
  if (r.has("pairs")) {
    detail::MapReader p(r.node("pairs"), "pairs", {"mode", "count"});
    std::string mode = "sampled";
    p.get("mode", mode);
    if (mode != "all" && mode != "sampled") detail::config_error(p.node("mode"), "pairs.mode", "expected all or sampled");
    c.pairs.all = mode == "all";
    p.get("count", c.pairs.count);
  }
  if (!r.has("pairs") || !r.node("pairs")["count"]) {
    const auto n = static_cast<std::int64_t>(config_players(c));
    c.pairs.count = static_cast<int>(std::min<std::int64_t>(c.pairs.count, std::max<std::int64_t>(1, n * (n - 1) / 2)));
  }
  if (r.has("metrics")) {
    const auto m = r.node("metrics");
    if (!m.IsSequence()) detail::config_error(m, "metrics", "expected a list");
    for (const auto& item : m) {
      try {
        c.metrics.push_back(parse_metric_kind(item.as<std::string>()));
      } catch (const Error& e) {
        detail::config_error(item, "metrics", e.message());
      }
    }
  }
  r.get("retain_deltas", c.retain_deltas);
  r.get("workers", c.workers);
  r.get("output", c.output);
  try {
    validate_config(c);
  } catch (const Error& e) {
    fail(ErrorCode::kConfigError, e.message());
  }
  return c;
}

/// Loads a file; relative tensor paths are made absolute against its directory.
inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kConfigError, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig c;
  try {
    c = parse_config(ss.str());
  } catch (const Error& e) {
    fail(ErrorCode::kConfigError, path.string() + ": " + e.message());
  }
  const auto base = std::filesystem::absolute(path).parent_path();
  auto resolve = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  for (auto& p : c.image.inputs) resolve(p);
  resolve(c.image.reference);
  return c;
}

namespace detail {

inline void emit_doubles(YAML::Emitter& out, const std::vector<double>& xs) {
  out << YAML::Flow << YAML::BeginSeq;
  for (double x : xs) out << format_double(x);
  out << YAML::EndSeq;
}

inline void emit_bridge(YAML::Emitter& out, const BridgeConfig& b) {
  out << YAML::Key << "transport" << YAML::Value << std::string(to_string(b.transport));
  out << YAML::Key << "address" << YAML::Value << b.address;
  out << YAML::Key << "command" << YAML::Value << b.command;
  out << YAML::Key << "input_ref" << YAML::Value << b.input_ref;
  out << YAML::Key << "batch_size" << YAML::Value << b.batch_size;
  out << YAML::Key << "timeout" << YAML::Value << format_double(b.timeout);
  out << YAML::Key << "protocol_version" << YAML::Value << b.protocol_version;
  out << YAML::Key << "pipeline_depth" << YAML::Value << b.pipeline_depth;
}

}  // namespace detail

inline std::string serialize_config(const RunConfig& c) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "version" << YAML::Value << c.version;
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::Key << "game" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "source" << YAML::Value << std::string(to_string(c.source));
  switch (c.source) {
    case GameSource::kSynthetic: {
      const auto& s = c.synthetic.spec;
      out << YAML::Key << "synthetic" << YAML::Value << YAML::BeginMap;
      out << YAML::Key << "kind" << YAML::Value << std::string(to_string(s.kind));
      out << YAML::Key << "n" << YAML::Value << s.n;
      out << YAML::Key << "samples" << YAML::Value << c.synthetic.samples;
      out << YAML::Key << "weights" << YAML::Value;
      detail::emit_doubles(out, s.weights);
      out << YAML::Key << "pair" << YAML::Value << YAML::Flow << YAML::BeginSeq << s.i << s.j << YAML::EndSeq;
      out << YAML::Key << "value" << YAML::Value << format_double(s.value);
      out << YAML::Key << "context_values" << YAML::Value;
      detail::emit_doubles(out, s.context_values);
      out << YAML::Key << "grid" << YAML::Value << s.grid;
      out << YAML::EndMap;
      break;
    }
    case GameSource::kImage: {
      const auto& im = c.image;
      out << YAML::Key << "image" << YAML::Value << YAML::BeginMap;
      out << YAML::Key << "inputs" << YAML::Value << YAML::BeginSeq;
      for (const auto& p : im.inputs) out << p;
      out << YAML::EndSeq;
      out << YAML::Key << "generate" << YAML::Value << im.generate;
      out << YAML::Key << "channels" << YAML::Value << im.channels;
      out << YAML::Key << "height" << YAML::Value << im.height;
      out << YAML::Key << "width" << YAML::Value << im.width;
      out << YAML::Key << "grid" << YAML::Value << im.grid;
      out << YAML::Key << "pad" << YAML::Value << std::string(to_string(im.pad));
      out << YAML::Key << "baseline" << YAML::Value << std::string(to_string(im.baseline));
      out << YAML::Key << "baseline_values" << YAML::Value;
      detail::emit_doubles(out, im.baseline_values);
      out << YAML::Key << "reference" << YAML::Value << im.reference;
      out << YAML::Key << "scorer" << YAML::Value << YAML::BeginMap;
      out << YAML::Key << "kind" << YAML::Value << std::string(to_string(im.scorer.kind));
      out << YAML::Key << "seed" << YAML::Value << im.scorer.seed;
      out << YAML::Key << "hidden" << YAML::Value << im.scorer.hidden;
      out << YAML::Key << "weights" << YAML::Value;
      detail::emit_doubles(out, im.scorer.weights);
      out << YAML::Key << "bias" << YAML::Value << format_double(im.scorer.bias);
      out << YAML::Key << "value" << YAML::Value << format_double(im.scorer.value);
      if (im.scorer.kind == ScorerKind::kRemote) {
        out << YAML::Key << "bridge" << YAML::Value << YAML::BeginMap;
        detail::emit_bridge(out, im.scorer.bridge);
        out << YAML::EndMap;
      }
      out << YAML::EndMap;
      out << YAML::Key << "target" << YAML::Value << im.target;
      out << YAML::Key << "score_kind" << YAML::Value << std::string(to_string(im.score_kind));
      out << YAML::EndMap;
      break;
    }
    case GameSource::kBridge:
      out << YAML::Key << "bridge" << YAML::Value << YAML::BeginMap;
      detail::emit_bridge(out, c.bridge.bridge);
      out << YAML::Key << "n" << YAML::Value << c.bridge.n;
      out << YAML::Key << "input_refs" << YAML::Value << YAML::Flow << YAML::BeginSeq;
      for (const auto& r : c.bridge.input_refs) out << r;
      out << YAML::EndSeq;
      out << YAML::EndMap;
      break;
  }
  out << YAML::EndMap;

  out << YAML::Key << "plan" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "mode" << YAML::Value << (c.plan.mode == ProfileMode::kExact ? "exact" : "sampled");
  out << YAML::Key << "orders" << YAML::Value;
  if (c.plan.orders_preset.empty()) {
    out << YAML::Flow << YAML::BeginSeq;
    for (int m : c.plan.orders) out << m;
    out << YAML::EndSeq;
  } else {
    out << c.plan.orders_preset;
  }
  out << YAML::Key << "contexts_per_order" << YAML::Value << c.plan.contexts_per_order;
  out << YAML::EndMap;

  out << YAML::Key << "pairs" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "mode" << YAML::Value << (c.pairs.all ? "all" : "sampled");
  out << YAML::Key << "count" << YAML::Value << c.pairs.count;
  out << YAML::EndMap;

  out << YAML::Key << "metrics" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (auto m : c.metrics) out << std::string(to_string(m));
  out << YAML::EndSeq;
  out << YAML::Key << "retain_deltas" << YAML::Value << c.retain_deltas;
  out << YAML::Key << "workers" << YAML::Value << c.workers;
  out << YAML::Key << "output" << YAML::Value << c.output;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

/// Identity of what a run computes. Worker count and output location do
/// not change results and are left out.
inline std::string config_digest(const RunConfig& c) {
  RunConfig canonical = c;
  canonical.workers = 1;
  canonical.output = "-";
  return detail::hex64(fnv1a(serialize_config(canonical)));
}

}  // namespace moi

#endif  // MOI_CONFIG_HPP_
