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

#ifndef MOI_SHAPLEY_HPP_
#define MOI_SHAPLEY_HPP_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "moi/coalition.hpp"
#include "moi/error.hpp"
#include "moi/game.hpp"
#include "moi/numeric.hpp"

namespace moi {

inline constexpr int kDefaultExactLimit = 20;

namespace detail {

inline constexpr std::size_t kEnumerationChunk = std::size_t{1} << 12;

inline void check_exact_size(int n, int limit) {
  if (n > limit || n > 62) {
    fail(ErrorCode::kExactSizeLimit, "exact enumeration over n=" + std::to_string(n) +
                                         " players exceeds the limit of " + std::to_string(limit));
  }
}

// Inserts the bits of `compressed` into a full mask, skipping `hole`.
inline std::uint64_t expand_around(std::uint64_t compressed, int hole) {
  const std::uint64_t low = compressed & ((std::uint64_t{1} << hole) - 1);
  const std::uint64_t high = compressed >> hole;
  return low | (high << (hole + 1));
}

}  // namespace detail

/// Shapley weight per coalition size s in [0, n-1]: 1 / (n * C(n-1, s)),
/// which equals (n-s-1)! s! / n! without forming factorials.
inline std::vector<double> shapley_weights(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) w[static_cast<std::size_t>(s)] = 1.0 / (n * binomial(n - 1, s));
  return w;
}

/// Shapley value of player i by enumerating every S not containing i, with
/// caller-provided per-size weights. Marginals are summed per size first,
/// then weighted.
inline double shapley_value_weighted(GameEvaluator& game, int i, std::span<const double> weights,
                                     int exact_limit = kDefaultExactLimit) {
  const int n = game.num_players();
  detail::check_exact_size(n, exact_limit);
  if (i < 0 || i >= n) fail(ErrorCode::kInvalidPlayer, "player " + std::to_string(i));
  if (static_cast<int>(weights.size()) != n) {
    fail(ErrorCode::kInvalidArgument, "need one weight per coalition size");
  }

  std::vector<CompensatedSum> by_size(static_cast<std::size_t>(n));
  const std::uint64_t total = std::uint64_t{1} << (n - 1);
  std::vector<Coalition> batch;
  std::vector<int> sizes;
  for (std::uint64_t start = 0; start < total; start += detail::kEnumerationChunk) {
    const std::uint64_t stop = std::min<std::uint64_t>(total, start + detail::kEnumerationChunk);
    batch.clear();
    sizes.clear();
    for (std::uint64_t c = start; c < stop; ++c) {
      const std::uint64_t s = detail::expand_around(c, i);
      batch.push_back(Coalition::from_word(n, s | (std::uint64_t{1} << i)));
      batch.push_back(Coalition::from_word(n, s));
      sizes.push_back(std::popcount(c));
    }
    const auto v = game.evaluate_batch(batch);
    for (std::size_t k = 0; k < sizes.size(); ++k) {
      by_size[static_cast<std::size_t>(sizes[k])] += v[2 * k] - v[2 * k + 1];
    }
  }
  CompensatedSum phi;
  for (int s = 0; s < n; ++s) {
    phi += weights[static_cast<std::size_t>(s)] * by_size[static_cast<std::size_t>(s)].value();
  }
  return phi.value();
}

inline double shapley_value_exact(GameEvaluator& game, int i, int exact_limit = kDefaultExactLimit) {
  detail::check_exact_size(game.num_players(), exact_limit);
  return shapley_value_weighted(game, i, shapley_weights(game.num_players()), exact_limit);
}

/// All n Shapley values from a single pass over the 2^n coalitions.
inline std::vector<double> shapley_values_exact(GameEvaluator& game,
                                                int exact_limit = kDefaultExactLimit) {
  const int n = game.num_players();
  detail::check_exact_size(n, exact_limit);
  const std::uint64_t total = std::uint64_t{1} << n;
  std::vector<double> table(total);
  std::vector<Coalition> batch;
  for (std::uint64_t start = 0; start < total; start += detail::kEnumerationChunk) {
    const std::uint64_t stop = std::min<std::uint64_t>(total, start + detail::kEnumerationChunk);
    batch.clear();
    for (std::uint64_t c = start; c < stop; ++c) batch.push_back(Coalition::from_word(n, c));
    const auto v = game.evaluate_batch(batch);
    std::copy(v.begin(), v.end(), table.begin() + static_cast<std::ptrdiff_t>(start));
  }

  const auto weights = shapley_weights(n);
  std::vector<double> phi(static_cast<std::size_t>(n));
  std::vector<CompensatedSum> by_size(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    std::fill(by_size.begin(), by_size.end(), CompensatedSum{});
    const std::uint64_t bit = std::uint64_t{1} << i;
    for (std::uint64_t s = 0; s < total; ++s) {
      if (s & bit) continue;
      by_size[static_cast<std::size_t>(std::popcount(s))] += table[s | bit] - table[s];
    }
    CompensatedSum acc;
    for (int k = 0; k < n; ++k) {
      acc += weights[static_cast<std::size_t>(k)] * by_size[static_cast<std::size_t>(k)].value();
    }
    phi[static_cast<std::size_t>(i)] = acc.value();
  }
  return phi;
}

}  // namespace moi

#endif  // MOI_SHAPLEY_HPP_
