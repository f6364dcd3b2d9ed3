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

#ifndef MOI_BUILTIN_SCORER_HPP_
#define MOI_BUILTIN_SCORER_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "moi/coalition.hpp"
#include "moi/error.hpp"
#include "moi/game.hpp"
#include "moi/numeric.hpp"

namespace moi {

inline constexpr int kDefaultHiddenWidth = 32;

/// Two-layer fully connected network with a ramp (max(0, x)) hidden layer
/// and a single output, weights drawn from a seed. Evaluation order is
/// fixed and accumulates in double, so a (seed, input) pair scores the same
/// everywhere.
class BuiltinScorer {
 public:
  BuiltinScorer(std::uint64_t seed, int input_dim, int hidden = kDefaultHiddenWidth)
      : seed_(seed), input_dim_(input_dim), hidden_(hidden) {
    if (input_dim < 1 || hidden < 1) fail(ErrorCode::kInvalidArgument, "network dimensions must be positive");
    SplitMix64 rng(hash_combine(seed, 0x6d6c70ULL));
    const double in_scale = 1.0 / std::sqrt(static_cast<double>(input_dim));
    const double out_scale = 1.0 / std::sqrt(static_cast<double>(hidden));
    w1_.resize(static_cast<std::size_t>(hidden) * static_cast<std::size_t>(input_dim));
    for (auto& w : w1_) w = rng.uniform(-1.0, 1.0) * in_scale;
    b1_.resize(static_cast<std::size_t>(hidden));
    for (auto& b : b1_) b = rng.uniform(-0.1, 0.1);
    w2_.resize(static_cast<std::size_t>(hidden));
    for (auto& w : w2_) w = rng.uniform(-1.0, 1.0) * out_scale;
    b2_ = rng.uniform(-0.1, 0.1);
  }

  double score(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != input_dim_) {
      fail(ErrorCode::kShapeMismatch, "network expects " + std::to_string(input_dim_) + " inputs, got " +
                                          std::to_string(x.size()));
    }
    double out = b2_;
    for (int h = 0; h < hidden_; ++h) {
      const double* row = &w1_[static_cast<std::size_t>(h) * static_cast<std::size_t>(input_dim_)];
      double a = b1_[static_cast<std::size_t>(h)];
      for (int k = 0; k < input_dim_; ++k) a += row[k] * x[static_cast<std::size_t>(k)];
      if (a > 0.0) out += w2_[static_cast<std::size_t>(h)] * a;
    }
    return out;
  }

  int input_dim() const { return input_dim_; }
  int hidden() const { return hidden_; }
  std::uint64_t seed() const { return seed_; }

  std::string descriptor() const {
    return "mlp(seed=" + std::to_string(seed_) + ",in=" + std::to_string(input_dim_) +
           ",hidden=" + std::to_string(hidden_) + ")";
  }

 private:
  std::uint64_t seed_;
  int input_dim_;
  int hidden_;
  std::vector<double> w1_, b1_, w2_;
  double b2_ = 0.0;
};

/// Seeded input vector with entries in [0, 1).
inline std::vector<double> seeded_input(std::uint64_t seed, int n) {
  SplitMix64 rng(hash_combine(seed, 0x696e707574ULL));
  std::vector<double> x(static_cast<std::size_t>(n));
  for (auto& v : x) v = rng.uniform01();
  return x;
}

/// v(S) = network(x masked to S), absent entries set to zero. This is the
/// game the built-in bridge server exposes.
class BuiltinVectorGame final : public GameEvaluator {
 public:
  BuiltinVectorGame(std::uint64_t seed, int n, int hidden = kDefaultHiddenWidth)
      : net_(seed, n, hidden), input_(seeded_input(seed, n)) {}

  BuiltinVectorGame(BuiltinScorer net, std::vector<double> input)
      : net_(std::move(net)), input_(std::move(input)) {
    if (static_cast<int>(input_.size()) != net_.input_dim()) {
      fail(ErrorCode::kShapeMismatch, "input length differs from network width");
    }
  }

  int num_players() const override { return net_.input_dim(); }

  std::vector<double> evaluate_batch(std::span<const Coalition> coalitions) override {
    std::vector<double> out;
    out.reserve(coalitions.size());
    std::vector<double> masked(input_.size());
    for (const auto& s : coalitions) {
      std::fill(masked.begin(), masked.end(), 0.0);
      s.for_each([&](int k) { masked[static_cast<std::size_t>(k)] = input_[static_cast<std::size_t>(k)]; });
      out.push_back(net_.score(masked));
    }
    return out;
  }

  std::string descriptor() const override { return "builtin_vector(" + net_.descriptor() + ")"; }

  const std::vector<double>& input() const { return input_; }
  const BuiltinScorer& network() const { return net_; }

 private:
  BuiltinScorer net_;
  std::vector<double> input_;
};

}  // namespace moi

#endif  // MOI_BUILTIN_SCORER_HPP_
