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

// Games with known interaction structure. They serve as oracles for the
// engine and as sources for the CLI's synthetic runs.

#ifndef MOI_SYNTHETIC_HPP_
#define MOI_SYNTHETIC_HPP_

#include <bit>
#include <cstdint>
#include <iomanip>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "moi/coalition.hpp"
#include "moi/error.hpp"
#include "moi/game.hpp"
#include "moi/numeric.hpp"

namespace moi {

inline constexpr int kMaxTablePlayers = 20;

namespace detail {

inline std::string hex64(std::uint64_t x) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << x;
  return os.str();
}

inline std::uint64_t hash_values(std::span<const double> xs) {
  std::uint64_t h = xs.size();
  for (double x : xs) h = hash_combine(h, std::bit_cast<std::uint64_t>(x));
  return h;
}

// Small-n games index coalitions by their first word.
inline std::uint64_t table_index(const Coalition& s) { return s.words()[0]; }

}  // namespace detail

/// Pointwise base class: subclasses score one coalition at a time.
class PointwiseGame : public GameEvaluator {
 public:
  explicit PointwiseGame(int n) : n_(n) { check_player_count(n); }

  int num_players() const override { return n_; }

  std::vector<double> evaluate_batch(std::span<const Coalition> coalitions) override {
    std::vector<double> out;
    out.reserve(coalitions.size());
    for (const auto& s : coalitions) out.push_back(value(s));
    return out;
  }

  virtual double value(const Coalition& s) const = 0;

 protected:
  int n_;
};

/// v(S) = sum of w_k over k in S.
class AdditiveGame final : public PointwiseGame {
 public:
  explicit AdditiveGame(std::vector<double> weights)
      : PointwiseGame(static_cast<int>(weights.size())), weights_(std::move(weights)) {}

  double value(const Coalition& s) const override {
    CompensatedSum sum;
    s.for_each([&](int k) { sum += weights_[static_cast<std::size_t>(k)]; });
    return sum.value();
  }

  std::string descriptor() const override {
    return "additive(n=" + std::to_string(n_) + ",w=" +
           detail::hex64(detail::hash_values(weights_)) + ")";
  }

  const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<double> weights_;
};

/// v(S) = c when both i and j are in S, else 0.
class PairAndGame final : public PointwiseGame {
 public:
  PairAndGame(int n, int i, int j, double c) : PointwiseGame(n), i_(i), j_(j), c_(c) {
    check_pair(n, i, j);
  }

  double value(const Coalition& s) const override {
    return s.contains(i_) && s.contains(j_) ? c_ : 0.0;
  }

  std::string descriptor() const override {
    std::ostringstream os;
    os.precision(17);
    os << "pair_and(n=" << n_ << ",i=" << i_ << ",j=" << j_ << ",c=" << c_ << ")";
    return os.str();
  }

 private:
  int i_, j_;
  double c_;
};

/// v(N) = c, every proper subset scores 0. A pure "memorization" game: all
/// interaction sits at the top order.
class FullCoalitionGame final : public PointwiseGame {
 public:
  FullCoalitionGame(int n, double c) : PointwiseGame(n), c_(c) {}

  double value(const Coalition& s) const override { return s.count() == n_ ? c_ : 0.0; }

  std::string descriptor() const override {
    std::ostringstream os;
    os.precision(17);
    os << "full_coalition(n=" << n_ << ",c=" << c_ << ")";
    return os.str();
  }

 private:
  double c_;
};

/// An explicit score for each of the 2^n coalitions, indexed by the
/// coalition's bit pattern.
class TableGame final : public PointwiseGame {
 public:
  TableGame(int n, std::vector<double> table, std::string tag = {})
      : PointwiseGame(n), table_(std::move(table)), tag_(std::move(tag)) {
    if (n > kMaxTablePlayers) {
      fail(ErrorCode::kSizeLimit, "table game limited to n <= 20, got " + std::to_string(n));
    }
    if (table_.size() != (std::size_t{1} << n)) {
      fail(ErrorCode::kInvalidArgument, "table needs 2^n entries");
    }
  }

  /// Scores drawn uniformly from [-1, 1).
  static TableGame random(int n, std::uint64_t seed) {
    if (n < 1 || n > kMaxTablePlayers) {
      fail(ErrorCode::kSizeLimit, "table game limited to 1 <= n <= 20, got " + std::to_string(n));
    }
    SplitMix64 rng(hash_combine(seed, 0x7461626c65ULL));
    std::vector<double> t(std::size_t{1} << n);
    for (auto& x : t) x = rng.uniform(-1.0, 1.0);
    return TableGame(n, std::move(t), "seed=" + std::to_string(seed));
  }

  double value(const Coalition& s) const override { return table_[detail::table_index(s)]; }

  std::string descriptor() const override {
    return "table(n=" + std::to_string(n_) + "," +
           (tag_.empty() ? "h=" + detail::hex64(detail::hash_values(table_)) : tag_) + ")";
  }

  const std::vector<double>& table() const { return table_; }

 private:
  std::vector<double> table_;
  std::string tag_;
};

/// A game whose pair delta for (i, j) under context S is a prescribed value.
/// `context_values` is indexed by the context's bit pattern over the other
/// n-2 players, compressed to consecutive bits in increasing player order.
/// v(S) = context_values[S minus {i,j}] when {i,j} is in S, else 0.
class SignedContextGame final : public PointwiseGame {
 public:
  SignedContextGame(int n, int i, int j, std::vector<double> context_values)
      : PointwiseGame(n), i_(i), j_(j), values_(std::move(context_values)) {
    check_pair(n, i, j);
    if (n > kMaxTablePlayers) {
      fail(ErrorCode::kSizeLimit, "signed-context game limited to n <= 20");
    }
    if (values_.size() != (std::size_t{1} << (n - 2))) {
      fail(ErrorCode::kInvalidArgument, "signed-context game needs 2^(n-2) context values");
    }
  }

  /// Random signs (+1/-1) per context.
  static SignedContextGame random_signs(int n, int i, int j, std::uint64_t seed) {
    if (n < 2 || n > kMaxTablePlayers) fail(ErrorCode::kSizeLimit, "signed-context n out of range");
    SplitMix64 rng(hash_combine(seed, 0x7369676eULL));
    std::vector<double> v(std::size_t{1} << (n - 2));
    for (auto& x : v) x = (rng() >> 63) != 0 ? 1.0 : -1.0;
    return SignedContextGame(n, i, j, std::move(v));
  }

  std::size_t context_index(const Coalition& s) const {
    std::size_t idx = 0;
    int bit = 0;
    for (int k = 0; k < n_; ++k) {
      if (k == i_ || k == j_) continue;
      if (s.contains(k)) idx |= std::size_t{1} << bit;
      ++bit;
    }
    return idx;
  }

  double value(const Coalition& s) const override {
    if (!s.contains(i_) || !s.contains(j_)) return 0.0;
    return values_[context_index(s)];
  }

  std::string descriptor() const override {
    return "signed_context(n=" + std::to_string(n_) + ",i=" + std::to_string(i_) +
           ",j=" + std::to_string(j_) + ",h=" + detail::hex64(detail::hash_values(values_)) + ")";
  }

 private:
  int i_, j_;
  std::vector<double> values_;
};

/// Sum of PairAnd(c) terms over 4-neighbour adjacent cells of a g x g grid
/// (cell id = row * g + col).
class LocalPairsGame final : public PointwiseGame {
 public:
  LocalPairsGame(int grid, double c) : PointwiseGame(grid * grid), grid_(grid), c_(c) {
    for (int r = 0; r < grid; ++r) {
      for (int col = 0; col < grid; ++col) {
        const int id = r * grid + col;
        if (col + 1 < grid) pairs_.emplace_back(id, id + 1);
        if (r + 1 < grid) pairs_.emplace_back(id, id + grid);
      }
    }
  }

  double value(const Coalition& s) const override {
    CompensatedSum sum;
    for (auto [a, b] : pairs_) {
      if (s.contains(a) && s.contains(b)) sum += c_;
    }
    return sum.value();
  }

  std::string descriptor() const override {
    std::ostringstream os;
    os.precision(17);
    os << "local_pairs(g=" << grid_ << ",c=" << c_ << ")";
    return os.str();
  }

  const std::vector<std::pair<int, int>>& adjacent_pairs() const { return pairs_; }

 private:
  int grid_;
  double c_;
  std::vector<std::pair<int, int>> pairs_;
};

/// a * u + b * w. The components must outlive the combination.
class LinearCombinationGame final : public GameEvaluator {
 public:
  LinearCombinationGame(double a, GameEvaluator& u, double b, GameEvaluator& w)
      : a_(a), b_(b), u_(u), w_(w) {
    if (u.num_players() != w.num_players()) {
      fail(ErrorCode::kInvalidArgument, "combined games must share the player count");
    }
  }

  int num_players() const override { return u_.num_players(); }

  std::vector<double> evaluate_batch(std::span<const Coalition> coalitions) override {
    auto vu = u_.evaluate_batch(coalitions);
    auto vw = w_.evaluate_batch(coalitions);
    for (std::size_t k = 0; k < vu.size(); ++k) vu[k] = a_ * vu[k] + b_ * vw[k];
    return vu;
  }

  std::string descriptor() const override {
    std::ostringstream os;
    os.precision(17);
    os << "lincomb(" << a_ << "*" << u_.descriptor() << "," << b_ << "*" << w_.descriptor() << ")";
    return os.str();
  }

  bool concurrency_safe() const override { return u_.concurrency_safe() && w_.concurrency_safe(); }

 private:
  double a_, b_;
  GameEvaluator& u_;
  GameEvaluator& w_;
};

enum class SyntheticKind { kAdditive, kPairAnd, kFullCoalition, kTable, kSignedContext, kLocalPairs };

inline std::string_view to_string(SyntheticKind k) {
  switch (k) {
    case SyntheticKind::kAdditive: return "additive";
    case SyntheticKind::kPairAnd: return "pair_and";
    case SyntheticKind::kFullCoalition: return "full_coalition";
    case SyntheticKind::kTable: return "table";
    case SyntheticKind::kSignedContext: return "signed_context";
    case SyntheticKind::kLocalPairs: return "local_pairs";
  }
  return "unknown";
}

inline SyntheticKind parse_synthetic_kind(std::string_view s) {
  for (auto k : {SyntheticKind::kAdditive, SyntheticKind::kPairAnd, SyntheticKind::kFullCoalition,
                 SyntheticKind::kTable, SyntheticKind::kSignedContext, SyntheticKind::kLocalPairs}) {
    if (to_string(k) == s) return k;
  }
  fail(ErrorCode::kConfigError, "unknown synthetic game kind '" + std::string(s) + "'");
}

/// Parameters for make_synthetic. Fields a kind does not use are ignored.
struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::kTable;
  int n = 8;
  std::vector<double> weights;         // additive; seeded in [-1, 1) when empty
  int i = 0;                           // pair_and, signed_context
  int j = 1;
  double value = 1.0;                  // pair_and, full_coalition, local_pairs
  std::vector<double> context_values;  // signed_context; seeded +-1 when empty
  int grid = 3;                        // local_pairs (n = grid^2)

  friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

/// Deterministic game for (spec, seed). The descriptor encodes both.
inline std::unique_ptr<PointwiseGame> make_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  const std::string tag = "#seed=" + std::to_string(seed);
  class Tagged final : public PointwiseGame {
   public:
    Tagged(std::unique_ptr<PointwiseGame> inner, std::string tag)
        : PointwiseGame(inner->num_players()), inner_(std::move(inner)), tag_(std::move(tag)) {}
    double value(const Coalition& s) const override { return inner_->value(s); }
    std::string descriptor() const override { return inner_->descriptor() + tag_; }

   private:
    std::unique_ptr<PointwiseGame> inner_;
    std::string tag_;
  };

  std::unique_ptr<PointwiseGame> game;
  switch (spec.kind) {
    case SyntheticKind::kAdditive: {
      std::vector<double> w = spec.weights;
      if (w.empty()) {
        check_player_count(spec.n);
        SplitMix64 rng(hash_combine(seed, 0x616464ULL));
        w.resize(static_cast<std::size_t>(spec.n));
        for (auto& x : w) x = rng.uniform(-1.0, 1.0);
      } else if (static_cast<int>(w.size()) != spec.n) {
        fail(ErrorCode::kInvalidArgument, "additive weights length differs from n");
      }
      game = std::make_unique<AdditiveGame>(std::move(w));
      break;
    }
    case SyntheticKind::kPairAnd:
      game = std::make_unique<PairAndGame>(spec.n, spec.i, spec.j, spec.value);
      break;
    case SyntheticKind::kFullCoalition:
      game = std::make_unique<FullCoalitionGame>(spec.n, spec.value);
      break;
    case SyntheticKind::kTable:
      if (spec.n > kMaxTablePlayers) {
        fail(ErrorCode::kSizeLimit, "table game limited to n <= 20, got " + std::to_string(spec.n));
      }
      game = std::make_unique<TableGame>(TableGame::random(spec.n, seed));
      break;
    case SyntheticKind::kSignedContext:
      if (spec.n > kMaxTablePlayers) {
        fail(ErrorCode::kSizeLimit, "signed-context game limited to n <= 20");
      }
      if (spec.context_values.empty()) {
        game = std::make_unique<SignedContextGame>(
            SignedContextGame::random_signs(spec.n, spec.i, spec.j, seed));
      } else {
        game = std::make_unique<SignedContextGame>(spec.n, spec.i, spec.j, spec.context_values);
      }
      break;
    case SyntheticKind::kLocalPairs:
      if (spec.grid * spec.grid != spec.n) {
        fail(ErrorCode::kInvalidArgument, "local_pairs needs n = grid^2");
      }
      game = std::make_unique<LocalPairsGame>(spec.grid, spec.value);
      break;
  }
  return std::make_unique<Tagged>(std::move(game), tag);
}

}  // namespace moi

#endif  // MOI_SYNTHETIC_HPP_
