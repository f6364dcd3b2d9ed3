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

// Order-indexed aggregates over a set of per-sample interaction records.
//
// Every expectation over pairs is the plain mean over the recorded pairs of
// a sample (always i != j); the expectation over samples is the plain mean
// of those per-sample means. All sums are compensated.

#ifndef MOI_METRICS_HPP_
#define MOI_METRICS_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include "moi/error.hpp"
#include "moi/game.hpp"
#include "moi/interaction.hpp"
#include "moi/numeric.hpp"

namespace moi {

struct SampleRecord {
  std::string sample_id;
  double v_full = 0.0;   // v(N | x)
  double v_empty = 0.0;  // v(empty | x)
  std::vector<InteractionProfile> profiles;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

struct SampleRecordSet {
  int n = 0;
  std::vector<SampleRecord> samples;

  /// Orders present in every profile of every sample, ascending.
  std::vector<int> order_grid() const {
    std::vector<int> grid;
    bool first = true;
    for (const auto& s : samples) {
      for (const auto& p : s.profiles) {
        std::vector<int> orders;
        for (const auto& e : p.values) orders.push_back(e.m);
        if (first) {
          grid = orders;
          first = false;
        } else {
          std::vector<int> both;
          std::set_intersection(grid.begin(), grid.end(), orders.begin(), orders.end(),
                                std::back_inserter(both));
          grid = std::move(both);
        }
      }
    }
    return grid;
  }
};

enum class MetricKind { kStrength, kNormalized, kDisentanglement, kPurity, kAverage, kDelta, kEta };

constexpr std::string_view to_string(MetricKind k) {
  switch (k) {
    case MetricKind::kStrength: return "strength";
    case MetricKind::kNormalized: return "normalized";
    case MetricKind::kDisentanglement: return "disentanglement";
    case MetricKind::kPurity: return "purity";
    case MetricKind::kAverage: return "average";
    case MetricKind::kDelta: return "delta";
    case MetricKind::kEta: return "eta";
  }
  return "unknown";
}

inline MetricKind parse_metric_kind(std::string_view s) {
  if (s == "avg") return MetricKind::kAverage;
  for (auto k : {MetricKind::kStrength, MetricKind::kNormalized, MetricKind::kDisentanglement,
                 MetricKind::kPurity, MetricKind::kAverage, MetricKind::kDelta, MetricKind::kEta}) {
    if (to_string(k) == s) return k;
  }
  fail(ErrorCode::kInvalidArgument, "unknown metric '" + std::string(s) + "'");
}

/// A metric over an order grid. `degenerate[k]` marks values that are a
/// convention rather than a measurement (zero denominators).
struct OrderProfile {
  std::vector<int> orders;
  std::vector<double> values;
  std::vector<double> std_errors;  // empty when the metric has none
  MetricKind kind = MetricKind::kStrength;
  std::vector<bool> degenerate;

  double mean() const { return compensated_mean(values); }
};

struct MetricValue {
  double value = 0.0;
  bool degenerate = false;
};

namespace detail {

inline const PairOrderEstimate& estimate_at(const InteractionProfile& p, int m) {
  const auto* e = p.at_order(m);
  if (e == nullptr) {
    fail(ErrorCode::kMissingOrder, "order " + std::to_string(m) + " not recorded for pair (" +
                                       std::to_string(p.i) + ", " + std::to_string(p.j) + ")");
  }
  return *e;
}

// E_x E_{i,j} f(estimate).
template <typename F>
double sample_pair_mean(const SampleRecordSet& records, int m, F&& f) {
  if (records.samples.empty()) fail(ErrorCode::kMissingOrder, "record set is empty");
  CompensatedSum over_samples;
  for (const auto& s : records.samples) {
    if (s.profiles.empty()) {
      fail(ErrorCode::kMissingOrder, "sample '" + s.sample_id + "' has no pair profiles");
    }
    CompensatedSum over_pairs;
    for (const auto& p : s.profiles) over_pairs += f(estimate_at(p, m));
    over_samples += over_pairs.value() / static_cast<double>(s.profiles.size());
  }
  return over_samples.value() / static_cast<double>(records.samples.size());
}

inline const std::vector<double>& retained(const PairOrderEstimate& e) {
  if (e.deltas.size() != e.contexts_used || e.deltas.empty()) {
    fail(ErrorCode::kDeltasNotRetained, "per-context deltas were not retained for pair (" +
                                            std::to_string(e.i) + ", " + std::to_string(e.j) +
                                            ") at order " + std::to_string(e.m));
  }
  return e.deltas;
}

}  // namespace detail

/// Mean absolute m-order interaction.
inline double strength(const SampleRecordSet& records, int m) {
  return detail::sample_pair_mean(records, m, [](const PairOrderEstimate& e) { return std::abs(e.mean); });
}

/// Signed mean m-order interaction.
inline double average_interaction(const SampleRecordSet& records, int m) {
  return detail::sample_pair_mean(records, m, [](const PairOrderEstimate& e) { return e.mean; });
}

/// Standard error of average_interaction from the per-pair standard
/// errors, treating pair estimates as independent. Zero for exact records.
inline double average_interaction_std_error(const SampleRecordSet& records, int m) {
  if (records.samples.empty()) fail(ErrorCode::kMissingOrder, "record set is empty");
  CompensatedSum variance;
  for (const auto& s : records.samples) {
    CompensatedSum pairs;
    for (const auto& p : s.profiles) {
      const double se = detail::estimate_at(p, m).std_error;
      pairs += se * se;
    }
    const double np = static_cast<double>(s.profiles.size());
    variance += pairs.value() / (np * np);
  }
  const double ns = static_cast<double>(records.samples.size());
  return std::sqrt(variance.value()) / ns;
}

/// Share of the m-order strength carried by positive pair interactions.
inline double purity(const SampleRecordSet& records, int m) {
  const double s = strength(records, m);
  if (s == 0.0) fail(ErrorCode::kZeroStrength, "strength is zero at order " + std::to_string(m));
  const double positive = detail::sample_pair_mean(
      records, m, [](const PairOrderEstimate& e) { return std::max(e.mean, 0.0); });
  return std::clamp(positive / s, 0.0, 1.0);
}

/// |sum of deltas| over sum of |deltas|, each averaged over samples and
/// pairs. With sampled contexts both sums run over the drawn contexts, which
/// makes this a ratio estimator (slightly biased). A zero denominator gives 1,
/// flagged as degenerate.
inline MetricValue disentanglement(const SampleRecordSet& records, int m) {
  const double num = detail::sample_pair_mean(records, m, [](const PairOrderEstimate& e) {
    CompensatedSum s;
    for (double d : detail::retained(e)) s += d;
    return std::abs(s.value());
  });
  const double den = detail::sample_pair_mean(records, m, [](const PairOrderEstimate& e) {
    CompensatedSum s;
    for (double d : detail::retained(e)) s += std::abs(d);
    return s.value();
  });
  if (den == 0.0) return {1.0, true};
  return {std::clamp(num / den, 0.0, 1.0), false};
}

/// Strength over the grid divided by its mean over the grid.
inline OrderProfile normalized_strength(const SampleRecordSet& records) {
  OrderProfile out;
  out.kind = MetricKind::kNormalized;
  out.orders = records.order_grid();
  if (out.orders.empty()) fail(ErrorCode::kMissingOrder, "no order is recorded for every pair");
  for (int m : out.orders) out.values.push_back(strength(records, m));
  const double z = compensated_mean(out.values);
  if (z == 0.0) fail(ErrorCode::kAllZeroStrength, "interaction strength is zero at every order");
  for (auto& v : out.values) v /= z;
  out.degenerate.assign(out.values.size(), false);
  return out;
}

/// Element-wise |a - b| of two normalized profiles on the same grid.
inline OrderProfile flexibility_delta(const OrderProfile& a, const OrderProfile& b) {
  if (a.kind != MetricKind::kNormalized || b.kind != MetricKind::kNormalized) {
    fail(ErrorCode::kInvalidArgument, "flexibility compares normalized-strength profiles");
  }
  if (a.orders != b.orders) fail(ErrorCode::kOrderGridMismatch, "profiles use different order grids");
  OrderProfile out;
  out.kind = MetricKind::kDelta;
  out.orders = a.orders;
  for (std::size_t k = 0; k < a.values.size(); ++k) out.values.push_back(std::abs(a.values[k] - b.values[k]));
  out.degenerate.assign(out.values.size(), false);
  return out;
}

/// Mean |I^(m)| at m = eta_order(n), over the sample's pairs, divided by
/// |v(N) - v(empty)| taken from the record.
inline double eta(const SampleRecord& record, int n) {
  const double z = std::abs(record.v_full - record.v_empty);
  if (z <= 1e-12) {
    fail(ErrorCode::kDegenerateGame, "v(N) equals v(empty) for sample '" + record.sample_id + "'");
  }
  SampleRecordSet single{n, {record}};
  return strength(single, eta_order(n)) / z;
}

/// As above, with v(N) and v(empty) evaluated on `game`.
inline double eta(const SampleRecord& record, GameEvaluator& game) {
  const int n = game.num_players();
  SampleRecord r = record;
  const std::vector<Coalition> ends{Coalition::full(n), Coalition(n)};
  const auto v = game.evaluate_batch(ends);
  r.v_full = v[0];
  r.v_empty = v[1];
  return eta(r, n);
}

/// One metric over the record set's order grid. Zero-strength purity
/// becomes a flagged 0 so dataset-scale runs are not aborted by one flat
/// order.
inline OrderProfile metric_profile(const SampleRecordSet& records, MetricKind kind) {
  if (kind == MetricKind::kNormalized) return normalized_strength(records);
  OrderProfile out;
  out.kind = kind;
  out.orders = records.order_grid();
  if (out.orders.empty()) fail(ErrorCode::kMissingOrder, "no order is recorded for every pair");
  for (int m : out.orders) {
    MetricValue v;
    switch (kind) {
      case MetricKind::kStrength: v.value = strength(records, m); break;
      case MetricKind::kAverage:
        v.value = average_interaction(records, m);
        out.std_errors.push_back(average_interaction_std_error(records, m));
        break;
      case MetricKind::kDisentanglement: v = disentanglement(records, m); break;
      case MetricKind::kPurity:
        if (strength(records, m) == 0.0) {
          v = {0.0, true};
        } else {
          v.value = purity(records, m);
        }
        break;
      default:
        fail(ErrorCode::kInvalidArgument, "metric '" + std::string(to_string(kind)) +
                                              "' has no per-order profile");
    }
    out.values.push_back(v.value);
    out.degenerate.push_back(v.degenerate);
  }
  return out;
}

/// Per-order metric(A) - metric(B).
inline OrderProfile compare_sets(const SampleRecordSet& a, const SampleRecordSet& b, MetricKind metric) {
  if (a.n != b.n) {
    fail(ErrorCode::kOrderGridMismatch, "record sets have different player counts (" +
                                            std::to_string(a.n) + " vs " + std::to_string(b.n) + ")");
  }
  if (a.order_grid() != b.order_grid()) {
    fail(ErrorCode::kOrderGridMismatch, "record sets use different order grids");
  }
  const auto pa = metric_profile(a, metric);
  const auto pb = metric_profile(b, metric);
  OrderProfile out;
  out.kind = MetricKind::kDelta;
  out.orders = pa.orders;
  for (std::size_t k = 0; k < pa.values.size(); ++k) {
    out.values.push_back(pa.values[k] - pb.values[k]);
    out.degenerate.push_back(pa.degenerate[k] || pb.degenerate[k]);
  }
  return out;
}

}  // namespace moi

#endif  // MOI_METRICS_HPP_
