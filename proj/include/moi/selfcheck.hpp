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


// Built-in property suite over seeded table games.
//
// Each property is checked by two independent routes and reports the
// largest disagreement it saw.

#ifndef MOI_SELFCHECK_HPP_
#define MOI_SELFCHECK_HPP_

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "moi/game.hpp"
#include "moi/interaction.hpp"
#include "moi/numeric.hpp"
#include "moi/shapley.hpp"
#include "moi/synthetic.hpp"

namespace moi {

struct SelfcheckOptions {
  std::vector<int> sizes{4, 6, 8};
  int tables_per_size = 10;
  std::uint64_t seed = 2024;
  double tolerance = 1e-9;
  bool corrupt_weights = false;  // negative control: skews one Shapley weight
};

struct PropertyResult {
  std::string name;
  double max_deviation = 0.0;
  bool passed = true;
};

struct SizeTiming {
  int n = 0;
  double seconds = 0.0;
};

struct SelfcheckReport {
  std::vector<PropertyResult> properties;
  std::vector<SizeTiming> timings;
  int tables = 0;

  bool passed() const {
    return std::all_of(properties.begin(), properties.end(), [](const PropertyResult& p) { return p.passed; });
  }
};

namespace detail {

// Table in which player k never changes the score.
inline TableGame dummy_variant(const TableGame& base, int k) {
  std::vector<double> t(base.table().size());
  for (std::uint64_t s = 0; s < t.size(); ++s) t[s] = base.table()[s & ~(std::uint64_t{1} << k)];
  return TableGame(base.num_players(), std::move(t));
}

// Table in which players p and q are interchangeable.
inline TableGame symmetric_variant(const TableGame& base, int p, int q) {
  std::vector<double> t(base.table().size());
  const std::uint64_t bp = std::uint64_t{1} << p, bq = std::uint64_t{1} << q;
  for (std::uint64_t s = 0; s < t.size(); ++s) {
    std::uint64_t canon = s;
    if ((s & bq) && !(s & bp)) canon = (s & ~bq) | bp;
    t[s] = base.table()[canon];
  }
  return TableGame(base.num_players(), std::move(t));
}

// Direct weighted sum over S in N \ {i, j} of
// (n-|S|-2)! |S|! / (n-1)! * delta(S, i, j), read from the table.
inline double direct_interaction_index(const std::vector<double>& v, int n, int i, int j) {
  std::vector<long double> w(static_cast<std::size_t>(n - 1));
  for (int s = 0; s <= n - 2; ++s) {
    long double x = 1;
    for (int t = 2; t <= n - s - 2; ++t) x *= t;
    for (int t = 2; t <= s; ++t) x *= t;
    for (int t = 2; t <= n - 1; ++t) x /= t;
    w[static_cast<std::size_t>(s)] = x;
  }
  const std::uint64_t bi = std::uint64_t{1} << i, bj = std::uint64_t{1} << j;
  long double total = 0;
  for (std::uint64_t s = 0; s < v.size(); ++s) {
    if (s & (bi | bj)) continue;
    const double d = combine_delta(v[s | bi | bj], v[s | bi], v[s | bj], v[s]);
    total += w[static_cast<std::size_t>(std::popcount(s))] * d;
  }
  return static_cast<double>(total);
}

inline void record(PropertyResult& p, double deviation) {
  p.max_deviation = std::max(p.max_deviation, std::abs(deviation));
}

}  // namespace detail

inline SelfcheckReport run_selfcheck(const SelfcheckOptions& options = {}) {
  SelfcheckReport report;
  PropertyResult efficiency{"efficiency"}, linearity{"linearity"}, nullity{"nullity"}, symmetry{"symmetry"},
      marginal{"marginal_attribution"}, accumulation{"accumulation"};

  for (int n : options.sizes) {
    if (n < 2 || n > kMaxTablePlayers) fail(ErrorCode::kInvalidArgument, "selfcheck sizes must be in [2, 20]");
    const auto started = std::chrono::steady_clock::now();
    auto weights = shapley_weights(n);
    if (options.corrupt_weights) weights[static_cast<std::size_t>(n / 2)] *= 1.25;

    for (int t = 0; t < options.tables_per_size; ++t) {
      const std::uint64_t seed = hash_combine(hash_combine(options.seed, static_cast<std::uint64_t>(n)), t);
      auto u = TableGame::random(n, seed);
      auto w = TableGame::random(n, hash_combine(seed, 1));
      const auto& v = u.table();
      auto phi_of = [&](GameEvaluator& g) {
        std::vector<double> phi(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) phi[static_cast<std::size_t>(i)] = shapley_value_weighted(g, i, weights);
        return phi;
      };
      const auto phi_u = phi_of(u);
      const auto phi_w = phi_of(w);

      CompensatedSum total;
      for (double x : phi_u) total += x;
      detail::record(efficiency, total.value() - (v.back() - v.front()));

      const double a = 0.75, b = -1.25;
      LinearCombinationGame mix(a, u, b, w);
      const auto phi_mix = phi_of(mix);
      for (int i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        detail::record(linearity, phi_mix[k] - (a * phi_u[k] + b * phi_w[k]));
      }

      const int dummy = t % n;
      auto d = detail::dummy_variant(u, dummy);
      detail::record(nullity, shapley_value_weighted(d, dummy, weights));

      const int p = t % n, q = (p + 1 + (t / n) % (n - 1)) % n;
      auto sym = detail::symmetric_variant(u, p, q);
      detail::record(symmetry, shapley_value_weighted(sym, p, weights) - shapley_value_weighted(sym, q, weights));

      // Pair profiles over every order, exact.
      std::vector<std::vector<InteractionProfile>> by_player(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
          InteractionProfile prof{n, i, j, {}};
          for (int m = 0; m <= n - 2; ++m) prof.values.push_back(multi_order_exact(u, i, j, m));
          detail::record(accumulation, interaction_index(prof) - detail::direct_interaction_index(v, n, i, j));
          by_player[static_cast<std::size_t>(i)].push_back(prof);
          by_player[static_cast<std::size_t>(j)].push_back(prof);
        }
      }
      const double scale = 1.0 / (static_cast<double>(n) * (n - 1));
      for (int i = 0; i < n; ++i) {
        CompensatedSum attribution;
        attribution += v[std::uint64_t{1} << i] - v[0];
        for (const auto& prof : by_player[static_cast<std::size_t>(i)]) {
          for (const auto& e : prof.values) attribution += (n - 1 - e.m) * scale * e.mean;
        }
        detail::record(marginal, phi_u[static_cast<std::size_t>(i)] - attribution.value());
      }
      ++report.tables;
    }
    report.timings.push_back({n, std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count()});
  }

  for (auto* p : {&efficiency, &linearity, &nullity, &symmetry, &marginal, &accumulation}) {
    p->passed = p->max_deviation <= options.tolerance;
    report.properties.push_back(*p);
  }
  return report;
}

}  // namespace moi

#endif  // MOI_SELFCHECK_HPP_
