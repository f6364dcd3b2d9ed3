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

// Multi-order pairwise interactions.
//
// For players i != j and an order m in [0, n-2], the m-order interaction is
// the mean of delta_v(S, i, j) over all contexts S drawn from the other n-2
// players with |S| = m. Averaging the n-1 orders gives the Shapley
// interaction index. Exact mode enumerates every context; sampled mode draws
// contexts from a per-(seed, pair, order) random stream, so results never
// depend on how tasks are scheduled across workers.

#ifndef MOI_INTERACTION_HPP_
#define MOI_INTERACTION_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "moi/cache.hpp"
#include "moi/coalition.hpp"
#include "moi/error.hpp"
#include "moi/game.hpp"
#include "moi/numeric.hpp"
#include "moi/parallel.hpp"

namespace moi {

inline constexpr std::uint64_t kDefaultEnumerationBudget = std::uint64_t{1} << 20;

struct PairOrderEstimate {
  int i = 0;
  int j = 0;
  int m = 0;
  double mean = 0.0;
  double std_error = 0.0;       // 0 in exact mode
  std::uint64_t contexts_used = 0;
  bool exact = false;
  std::vector<double> deltas;   // per-context samples, when retained

  friend bool operator==(const PairOrderEstimate&, const PairOrderEstimate&) = default;
};

/// Estimates for one pair over a set of orders, sorted by m. A complete
/// profile has all n-1 orders.
struct InteractionProfile {
  int n = 0;
  int i = 0;
  int j = 0;
  std::vector<PairOrderEstimate> values;

  const PairOrderEstimate* at_order(int m) const {
    auto it = std::lower_bound(values.begin(), values.end(), m,
                               [](const PairOrderEstimate& e, int order) { return e.m < order; });
    return it != values.end() && it->m == m ? &*it : nullptr;
  }

  bool complete() const {
    if (static_cast<int>(values.size()) != n - 1) return false;
    for (int m = 0; m <= n - 2; ++m) {
      if (values[static_cast<std::size_t>(m)].m != m) return false;
    }
    return true;
  }

  friend bool operator==(const InteractionProfile&, const InteractionProfile&) = default;
};

struct SamplingPlan {
  std::vector<int> orders;
  int contexts_per_order = 100;  // K_S
  int pairs_per_sample = 50;     // K_P
  std::uint64_t seed = 0;

  void validate(int n) const {
    if (contexts_per_order < 1) fail(ErrorCode::kInvalidArgument, "contexts_per_order must be >= 1");
    if (pairs_per_sample < 1) fail(ErrorCode::kInvalidArgument, "pairs_per_sample must be >= 1");
    for (int m : orders) {
      if (m < 0 || m > n - 2) {
        fail(ErrorCode::kInvalidArgument,
             "order " + std::to_string(m) + " outside [0, " + std::to_string(n - 2) + "]");
      }
    }
  }

  friend bool operator==(const SamplingPlan&, const SamplingPlan&) = default;
};

struct EstimateOptions {
  bool retain_deltas = false;
  std::uint64_t enumeration_budget = kDefaultEnumerationBudget;
};

/// Order used for the high-order globality score: round(0.9 n), at most n-2.
inline int eta_order(int n) {
  if (n < 2) fail(ErrorCode::kDegenerateOrder, "need at least two players");
  return static_cast<int>(std::min<long>(std::lround(0.9 * n), n - 2));
}

/// 18 evenly spaced orders over [0.05 n, 0.9 n], rounded, clamped to
/// [0, n-2] and deduplicated. The top point is always eta_order(n).
inline std::vector<int> default_orders(int n) {
  if (n < 2) fail(ErrorCode::kDegenerateOrder, "need at least two players");
  constexpr int kPoints = 18;
  const double lo = 0.05 * n;
  const double hi = 0.9 * n;
  std::vector<int> out;
  for (int k = 0; k < kPoints; ++k) {
    const double x = lo + (hi - lo) * k / (kPoints - 1);
    out.push_back(static_cast<int>(std::clamp<long>(std::lround(x), 0, n - 2)));
  }
  out.push_back(eta_order(n));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline std::vector<int> all_orders(int n) {
  std::vector<int> out;
  for (int m = 0; m <= n - 2; ++m) out.push_back(m);
  return out;
}

using PlayerPair = std::pair<int, int>;

inline std::vector<PlayerPair> all_pairs(int n) {
  std::vector<PlayerPair> out;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) out.emplace_back(i, j);
  }
  return out;
}

/// `count` distinct unordered pairs (i < j), uniform, drawn from a stream
/// keyed by (seed, stream). Returned in draw order.
inline std::vector<PlayerPair> sample_pairs(int n, int count, std::uint64_t seed,
                                            std::uint64_t stream = 0) {
  const std::uint64_t available = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n - 1) / 2;
  if (count < 1 || static_cast<std::uint64_t>(count) > available) {
    fail(ErrorCode::kInvalidArgument, "cannot draw " + std::to_string(count) +
                                          " distinct pairs from n=" + std::to_string(n));
  }
  SplitMix64 rng(hash_combine(hash_combine(seed, 0x7061697273ULL), stream));
  std::set<PlayerPair> seen;
  std::vector<PlayerPair> out;
  while (static_cast<int>(out.size()) < count) {
    auto a = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    auto b = static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 1)));
    if (b >= a) ++b;
    PlayerPair p{std::min(a, b), std::max(a, b)};
    if (seen.insert(p).second) out.push_back(p);
  }
  return out;
}

/// Seed of the random stream for one (pair, order) task. Symmetric in i, j.
inline std::uint64_t context_stream_seed(std::uint64_t seed, int i, int j, int m) {
  std::uint64_t h = hash_combine(seed, 0x6374787473ULL);
  h = hash_combine(h, static_cast<std::uint64_t>(std::min(i, j)));
  h = hash_combine(h, static_cast<std::uint64_t>(std::max(i, j)));
  return hash_combine(h, static_cast<std::uint64_t>(m));
}

namespace detail {

inline std::vector<int> players_except(int n, int i, int j) {
  std::vector<int> rest;
  rest.reserve(static_cast<std::size_t>(n - 2));
  for (int k = 0; k < n; ++k) {
    if (k != i && k != j) rest.push_back(k);
  }
  return rest;
}

// Evaluates delta_v for each context, in order, four coalitions per context.
inline void evaluate_deltas(GameEvaluator& game, const std::vector<Coalition>& contexts, int i,
                            int j, std::vector<double>& out) {
  std::vector<Coalition> batch;
  batch.reserve(contexts.size() * 4);
  for (const auto& s : contexts) {
    auto four = delta_coalitions(s, i, j);
    for (auto& c : four) batch.push_back(std::move(c));
  }
  const auto v = game.evaluate_batch(batch);
  for (std::size_t k = 0; k < contexts.size(); ++k) {
    out.push_back(combine_delta(v[4 * k], v[4 * k + 1], v[4 * k + 2], v[4 * k + 3]));
  }
}

inline void check_order(int n, int m) {
  if (n < 2 || m < 0 || m > n - 2) {
    fail(ErrorCode::kDegenerateOrder, "no context of size " + std::to_string(m) +
                                          " exists for n=" + std::to_string(n));
  }
}

inline PairOrderEstimate summarize(int i, int j, int m, std::vector<double> deltas, bool exact,
                                   bool retain) {
  PairOrderEstimate e;
  e.i = i;
  e.j = j;
  e.m = m;
  e.exact = exact;
  e.contexts_used = deltas.size();
  e.mean = compensated_mean(deltas);
  e.std_error = exact ? 0.0
                      : sample_stddev(deltas, e.mean) / std::sqrt(static_cast<double>(deltas.size()));
  if (retain) e.deltas = std::move(deltas);
  return e;
}

inline constexpr std::size_t kContextChunk = 1024;

}  // namespace detail

/// Exact m-order interaction: every size-m context, lexicographic order.
inline PairOrderEstimate multi_order_exact(GameEvaluator& game, int i, int j, int m,
                                           const EstimateOptions& options = {}) {
  const int n = game.num_players();
  check_pair(n, i, j);
  detail::check_order(n, m);
  const std::uint64_t total = binomial_saturating(n - 2, m);
  if (total > options.enumeration_budget) {
    fail(ErrorCode::kExactSizeLimit, "C(" + std::to_string(n - 2) + ", " + std::to_string(m) +
                                         ") contexts exceed the enumeration budget");
  }

  const auto rest = detail::players_except(n, i, j);
  std::vector<int> idx(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) idx[static_cast<std::size_t>(k)] = k;
  const int r = n - 2;

  std::vector<double> deltas;
  deltas.reserve(static_cast<std::size_t>(total));
  std::vector<Coalition> contexts;
  bool more = true;
  while (more) {
    Coalition s(n);
    for (int k : idx) s.insert(rest[static_cast<std::size_t>(k)]);
    contexts.push_back(std::move(s));

    // Advance to the next combination.
    int pos = m - 1;
    while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == r - m + pos) --pos;
    if (pos < 0) {
      more = false;
    } else {
      ++idx[static_cast<std::size_t>(pos)];
      for (int k = pos + 1; k < m; ++k) {
        idx[static_cast<std::size_t>(k)] = idx[static_cast<std::size_t>(k - 1)] + 1;
      }
    }
    if (contexts.size() == detail::kContextChunk || !more) {
      detail::evaluate_deltas(game, contexts, i, j, deltas);
      contexts.clear();
    }
  }
  return detail::summarize(i, j, m, std::move(deltas), true, options.retain_deltas);
}

/// Monte Carlo m-order interaction. Draws plan.contexts_per_order contexts
/// with replacement, each a uniform size-m subset (Floyd's algorithm). When
/// K_S covers every context the exact enumeration is returned instead.
inline PairOrderEstimate multi_order_sampled(GameEvaluator& game, int i, int j, int m,
                                             const SamplingPlan& plan,
                                             const EstimateOptions& options = {}) {
  const int n = game.num_players();
  check_pair(n, i, j);
  detail::check_order(n, m);
  if (plan.contexts_per_order < 1) {
    fail(ErrorCode::kInvalidArgument, "contexts_per_order must be >= 1");
  }
  const std::uint64_t total = binomial_saturating(n - 2, m);
  if (total == 0) fail(ErrorCode::kDegenerateOrder, "no contexts");
  const auto k_s = static_cast<std::uint64_t>(plan.contexts_per_order);
  if (k_s >= total) return multi_order_exact(game, i, j, m, options);

  const auto rest = detail::players_except(n, i, j);
  const int r = n - 2;
  // Draw the smaller of the subset and its complement.
  const bool complement = m > r / 2;
  const int draw = complement ? r - m : m;

  SplitMix64 rng(context_stream_seed(plan.seed, i, j, m));
  std::vector<char> picked(static_cast<std::size_t>(r));
  std::vector<int> chosen;
  chosen.reserve(static_cast<std::size_t>(draw));
  std::vector<double> deltas;
  deltas.reserve(static_cast<std::size_t>(k_s));
  std::vector<Coalition> contexts;

  for (std::uint64_t d = 0; d < k_s; ++d) {
    chosen.clear();
    for (int t = r - draw; t < r; ++t) {
      const auto u = static_cast<int>(rng.below(static_cast<std::uint64_t>(t) + 1));
      const int pick = picked[static_cast<std::size_t>(u)] ? t : u;
      picked[static_cast<std::size_t>(pick)] = 1;
      chosen.push_back(pick);
    }
    Coalition s(n);
    if (complement) {
      for (int k = 0; k < r; ++k) {
        if (!picked[static_cast<std::size_t>(k)]) s.insert(rest[static_cast<std::size_t>(k)]);
      }
    } else {
      for (int k : chosen) s.insert(rest[static_cast<std::size_t>(k)]);
    }
    for (int k : chosen) picked[static_cast<std::size_t>(k)] = 0;
    contexts.push_back(std::move(s));
    if (contexts.size() == detail::kContextChunk || d + 1 == k_s) {
      detail::evaluate_deltas(game, contexts, i, j, deltas);
      contexts.clear();
    }
  }
  return detail::summarize(i, j, m, std::move(deltas), false, options.retain_deltas);
}

/// Shapley interaction index as the mean of the n-1 per-order means.
inline double interaction_index(const InteractionProfile& profile) {
  if (profile.n < 2) fail(ErrorCode::kIncompleteProfile, "profile has no orders");
  CompensatedSum sum;
  for (int m = 0; m <= profile.n - 2; ++m) {
    const auto* e = profile.at_order(m);
    if (e == nullptr) {
      fail(ErrorCode::kIncompleteProfile, "order " + std::to_string(m) + " missing for pair (" +
                                              std::to_string(profile.i) + ", " +
                                              std::to_string(profile.j) + ")");
    }
    sum += e->mean;
  }
  return sum.value() / (profile.n - 1);
}

enum class ProfileMode { kExact, kSampled };

struct ProfileOptions {
  int workers = 1;
  bool retain_deltas = false;
  std::uint64_t enumeration_budget = kDefaultEnumerationBudget;
};

/// Orders a profile run covers: the plan's list, or every order in exact
/// mode / the default grid in sampled mode when the plan leaves it empty.
inline std::vector<int> resolve_orders(int n, const SamplingPlan& plan, ProfileMode mode) {
  std::vector<int> orders = plan.orders;
  if (orders.empty()) orders = mode == ProfileMode::kExact ? all_orders(n) : default_orders(n);
  std::sort(orders.begin(), orders.end());
  orders.erase(std::unique(orders.begin(), orders.end()), orders.end());
  return orders;
}

/// Profiles for a batch of pairs through one shared cache. Pair x order
/// tasks run on the worker pool; output is aligned with `pairs` and is
/// identical for any worker count.
inline std::vector<InteractionProfile> profile_pairs(CachedGame& game,
                                                     std::span<const PlayerPair> pairs,
                                                     const SamplingPlan& plan, ProfileMode mode,
                                                     const ProfileOptions& options = {}) {
  const int n = game.num_players();
  plan.validate(n);
  std::set<PlayerPair> distinct;
  for (auto [i, j] : pairs) {
    check_pair(n, i, j);
    if (!distinct.insert({std::min(i, j), std::max(i, j)}).second) {
      fail(ErrorCode::kInvalidArgument, "duplicate pair (" + std::to_string(i) + ", " +
                                            std::to_string(j) + ")");
    }
  }
  const auto orders = resolve_orders(n, plan, mode);

  std::vector<InteractionProfile> out(pairs.size());
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    out[p].n = n;
    out[p].i = pairs[p].first;
    out[p].j = pairs[p].second;
    out[p].values.resize(orders.size());
  }
  const EstimateOptions est{options.retain_deltas, options.enumeration_budget};
  parallel_for(pairs.size() * orders.size(), options.workers, [&](std::size_t task) {
    const std::size_t p = task / orders.size();
    const std::size_t o = task % orders.size();
    const auto [i, j] = pairs[p];
    out[p].values[o] = mode == ProfileMode::kExact
                           ? multi_order_exact(game, i, j, orders[o], est)
                           : multi_order_sampled(game, i, j, orders[o], plan, est);
  });
  return out;
}

inline std::vector<InteractionProfile> profile_pairs(GameEvaluator& game,
                                                     std::span<const PlayerPair> pairs,
                                                     const SamplingPlan& plan, ProfileMode mode,
                                                     const ProfileOptions& options = {}) {
  CachedGame cached(game);
  return profile_pairs(cached, pairs, plan, mode, options);
}

}  // namespace moi

#endif  // MOI_INTERACTION_HPP_
