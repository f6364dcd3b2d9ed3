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

#ifndef MOI_GAME_HPP_
#define MOI_GAME_HPP_

#include <array>
#include <span>
#include <string>
#include <vector>

#include "moi/coalition.hpp"
#include "moi/error.hpp"

namespace moi {

/// The value function v(S) of a cooperative game over n players.
///
/// Implementations must be deterministic: the same coalition always yields
/// the same score. Scores are plain doubles; whatever the model emits
/// (logit, log-odds, ...) is the evaluator's business.
class GameEvaluator {
 public:
  virtual ~GameEvaluator() = default;

  virtual int num_players() const = 0;

  /// Scores in input order, one per coalition.
  virtual std::vector<double> evaluate_batch(std::span<const Coalition> coalitions) = 0;

  /// Stable identity, used to key shared caches.
  virtual std::string descriptor() const = 0;

  /// Whether evaluate_batch may be entered from several threads at once.
  virtual bool concurrency_safe() const { return true; }

  double evaluate(const Coalition& s) {
    return evaluate_batch(std::span<const Coalition>(&s, 1)).front();
  }
};

inline void check_pair(int n, int i, int j) {
  if (i < 0 || i >= n || j < 0 || j >= n) {
    fail(ErrorCode::kInvalidPlayer, "pair (" + std::to_string(i) + ", " + std::to_string(j) +
                                        ") out of range for n=" + std::to_string(n));
  }
  if (i == j) fail(ErrorCode::kInvalidArgument, "pair needs two distinct players");
}

/// The four-term combination v(S+ij) - v(S+i) - v(S+j) + v(S). Grouped so
/// that swapping i and j gives the same bits. Every code path that forms a
/// pair delta goes through this.
inline double combine_delta(double v_ij, double v_i, double v_j, double v_none) {
  return (v_ij + v_none) - (v_i + v_j);
}

/// The four coalitions S+ij, S+i, S+j, S, in that order.
inline std::array<Coalition, 4> delta_coalitions(const Coalition& s, int i, int j) {
  return {s.with(i, j), s.with(i), s.with(j), s};
}

inline double delta_v(GameEvaluator& game, const Coalition& s, int i, int j) {
  const int n = game.num_players();
  check_pair(n, i, j);
  if (s.num_players() != n) {
    fail(ErrorCode::kInvalidArgument, "coalition built for a different player count");
  }
  if (s.contains(i) || s.contains(j)) {
    fail(ErrorCode::kPlayerInCoalition, "context already contains player " +
                                            std::to_string(s.contains(i) ? i : j));
  }
  const auto cs = delta_coalitions(s, i, j);
  const auto v = game.evaluate_batch(cs);
  return combine_delta(v[0], v[1], v[2], v[3]);
}

}  // namespace moi

#endif  // MOI_GAME_HPP_
