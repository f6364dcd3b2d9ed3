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

// Grid-cell games over an input tensor: each player is one rectangular cell
// of a g x g grid, and v(S) is a model score on the input with every cell
// outside S replaced by a baseline.

#ifndef MOI_IMAGE_GAME_HPP_
#define MOI_IMAGE_GAME_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "moi/builtin_scorer.hpp"
#include "moi/coalition.hpp"
#include "moi/error.hpp"
#include "moi/game.hpp"
#include "moi/numeric.hpp"
#include "moi/synthetic.hpp"
#include "moi/tensor.hpp"

namespace moi {

// ---------------------------------------------------------------------------
// Grid partition

/// How to split a side whose length is not a multiple of g.
///
/// kAbsorb: cells are floor(len / g) long and the last cell takes the
/// remainder. kEdgeReplicate: cells are ceil(len / g) long as if the image
/// were padded by repeating its last row/column; the padding is never scored,
/// so the last cell is clipped to the image.
enum class PadPolicy { kAbsorb, kEdgeReplicate };

constexpr std::string_view to_string(PadPolicy p) {
  return p == PadPolicy::kAbsorb ? "absorb" : "edge-replicate";
}

inline PadPolicy parse_pad_policy(std::string_view s) {
  if (s == "absorb") return PadPolicy::kAbsorb;
  if (s == "edge-replicate" || s == "edge_replicate") return PadPolicy::kEdgeReplicate;
  fail(ErrorCode::kInvalidArgument, "unknown pad policy '" + std::string(s) + "'");
}

struct CellRect {
  int y0 = 0, y1 = 0;  // rows [y0, y1)
  int x0 = 0, x1 = 0;  // columns [x0, x1)

  friend bool operator==(const CellRect&, const CellRect&) = default;
};

struct GridSpec {
  int g = 0;
  int height = 0;
  int width = 0;
  PadPolicy pad = PadPolicy::kAbsorb;
  std::vector<int> row_bounds;  // g + 1 entries
  std::vector<int> col_bounds;

  int num_players() const { return g * g; }

  /// Cell ids are row-major: cell r * g + c covers grid row r, column c.
  CellRect cell(int id) const {
    if (id < 0 || id >= num_players()) {
      fail(ErrorCode::kInvalidPlayer, "cell " + std::to_string(id) + " out of range");
    }
    const int r = id / g, c = id % g;
    return {row_bounds[static_cast<std::size_t>(r)], row_bounds[static_cast<std::size_t>(r) + 1],
            col_bounds[static_cast<std::size_t>(c)], col_bounds[static_cast<std::size_t>(c) + 1]};
  }

  std::string descriptor() const {
    return "grid(g=" + std::to_string(g) + "," + std::to_string(height) + "x" + std::to_string(width) + "," +
           std::string(to_string(pad)) + ")";
  }
};

namespace detail {

inline std::vector<int> split_side(int len, int g, PadPolicy pad, const char* side) {
  std::vector<int> bounds(static_cast<std::size_t>(g) + 1);
  if (pad == PadPolicy::kAbsorb) {
    const int size = len / g;
    for (int k = 0; k < g; ++k) bounds[static_cast<std::size_t>(k)] = k * size;
  } else {
    const int size = (len + g - 1) / g;
    for (int k = 0; k < g; ++k) {
      bounds[static_cast<std::size_t>(k)] = k * size;
      if (k * size >= len) {
        fail(ErrorCode::kBadGrid, std::string("edge-replicate leaves grid ") + side + " " + std::to_string(k) +
                                      " empty (length " + std::to_string(len) + ", g=" + std::to_string(g) + ")");
      }
    }
  }
  bounds[static_cast<std::size_t>(g)] = len;
  return bounds;
}

}  // namespace detail

inline GridSpec partition(int height, int width, int g, PadPolicy pad = PadPolicy::kAbsorb) {
  if (height < 1 || width < 1) fail(ErrorCode::kBadGrid, "image has no pixels");
  if (g < 1 || g > std::min(height, width)) {
    fail(ErrorCode::kBadGrid, "g=" + std::to_string(g) + " does not fit a " + std::to_string(height) + "x" +
                                  std::to_string(width) + " image");
  }
  check_player_count(g * g);
  GridSpec spec;
  spec.g = g;
  spec.height = height;
  spec.width = width;
  spec.pad = pad;
  spec.row_bounds = detail::split_side(height, g, pad, "row");
  spec.col_bounds = detail::split_side(width, g, pad, "column");
  return spec;
}

inline GridSpec partition(const Tensor& x, int g, PadPolicy pad = PadPolicy::kAbsorb) {
  return partition(x.height, x.width, g, pad);
}

// ---------------------------------------------------------------------------
// Baselines

enum class BaselineMode { kZero, kChannelMean, kConstant, kReference };

constexpr std::string_view to_string(BaselineMode m) {
  switch (m) {
    case BaselineMode::kZero: return "zero";
    case BaselineMode::kChannelMean: return "channel-mean";
    case BaselineMode::kConstant: return "constant";
    case BaselineMode::kReference: return "reference";
  }
  return "unknown";
}

inline BaselineMode parse_baseline_mode(std::string_view s) {
  if (s == "zero") return BaselineMode::kZero;
  if (s == "channel-mean" || s == "channel_mean" || s == "mean") return BaselineMode::kChannelMean;
  if (s == "constant") return BaselineMode::kConstant;
  if (s == "reference") return BaselineMode::kReference;
  fail(ErrorCode::kInvalidArgument, "unknown baseline '" + std::string(s) + "'");
}

/// What an absent pixel is replaced with.
struct BaselinePolicy {
  BaselineMode mode = BaselineMode::kChannelMean;
  std::vector<double> values;  // kConstant: one per channel, or a single value for all
  std::shared_ptr<const Tensor> reference;

  static BaselinePolicy zero() { return {BaselineMode::kZero, {}, nullptr}; }
  static BaselinePolicy channel_mean() { return {BaselineMode::kChannelMean, {}, nullptr}; }
  static BaselinePolicy constant(std::vector<double> v) { return {BaselineMode::kConstant, std::move(v), nullptr}; }
  static BaselinePolicy reference_tensor(Tensor t) {
    return {BaselineMode::kReference, {}, std::make_shared<const Tensor>(std::move(t))};
  }

  /// The full replacement tensor for input `x`.
  Tensor resolve(const Tensor& x) const {
    Tensor b(x.channels, x.height, x.width);
    const std::size_t plane = static_cast<std::size_t>(x.height) * static_cast<std::size_t>(x.width);
    switch (mode) {
      case BaselineMode::kZero:
        break;
      case BaselineMode::kChannelMean:
        for (int c = 0; c < x.channels; ++c) {
          const auto first = x.data.begin() + static_cast<std::ptrdiff_t>(c * plane);
          const double mu = compensated_mean(std::span<const double>(&*first, plane));
          std::fill(b.data.begin() + static_cast<std::ptrdiff_t>(c * plane),
                    b.data.begin() + static_cast<std::ptrdiff_t>((c + 1) * plane), mu);
        }
        break;
      case BaselineMode::kConstant: {
        if (values.size() != 1 && values.size() != static_cast<std::size_t>(x.channels)) {
          fail(ErrorCode::kShapeMismatch, "constant baseline needs 1 or " + std::to_string(x.channels) +
                                              " values, got " + std::to_string(values.size()));
        }
        for (int c = 0; c < x.channels; ++c) {
          const double v = values.size() == 1 ? values[0] : values[static_cast<std::size_t>(c)];
          std::fill(b.data.begin() + static_cast<std::ptrdiff_t>(c * plane),
                    b.data.begin() + static_cast<std::ptrdiff_t>((c + 1) * plane), v);
        }
        break;
      }
      case BaselineMode::kReference:
        if (!reference || !reference->same_shape(x)) {
          fail(ErrorCode::kShapeMismatch, "reference baseline shape differs from the input");
        }
        b = *reference;
        break;
    }
    return b;
  }

  std::string descriptor() const {
    std::ostringstream os;
    os << to_string(mode);
    if (mode == BaselineMode::kConstant) {
      os << "(" << detail::hex64(detail::hash_values(values)) << ")";
    } else if (mode == BaselineMode::kReference && reference) {
      os << "(" << detail::hex64(reference->digest()) << ")";
    }
    return os.str();
  }
};

namespace detail {

inline void copy_cell(const Tensor& from, Tensor& to, const CellRect& r) {
  for (int c = 0; c < from.channels; ++c) {
    for (int y = r.y0; y < r.y1; ++y) {
      const std::size_t row = from.index(c, y, r.x0);
      std::copy(from.data.begin() + static_cast<std::ptrdiff_t>(row),
                from.data.begin() + static_cast<std::ptrdiff_t>(row + static_cast<std::size_t>(r.x1 - r.x0)),
                to.data.begin() + static_cast<std::ptrdiff_t>(row));
    }
  }
}

inline void check_grid_fits(const Tensor& x, const GridSpec& spec) {
  if (x.height != spec.height || x.width != spec.width) {
    fail(ErrorCode::kShapeMismatch, "grid was built for a " + std::to_string(spec.height) + "x" +
                                        std::to_string(spec.width) + " image");
  }
}

// Masking against a baseline tensor resolved ahead of time.
inline void mask_into(const Tensor& x, const Tensor& base, const Coalition& s, const GridSpec& spec, Tensor& out) {
  out = base;
  s.for_each([&](int k) { copy_cell(x, out, spec.cell(k)); });
}

}  // namespace detail

/// Pixels in cells of S come from x; the rest come from the baseline.
inline Tensor apply_mask(const Tensor& x, const Coalition& s, const GridSpec& spec, const BaselinePolicy& baseline) {
  detail::check_grid_fits(x, spec);
  if (s.num_players() != spec.num_players()) {
    fail(ErrorCode::kInvalidArgument, "coalition has " + std::to_string(s.num_players()) + " players, grid has " +
                                          std::to_string(spec.num_players()));
  }
  Tensor out;
  detail::mask_into(x, baseline.resolve(x), s, spec, out);
  return out;
}

// ---------------------------------------------------------------------------
// Scorers

enum class ScoreKind { kLogit, kLogProbability, kLogOdds };

constexpr std::string_view to_string(ScoreKind k) {
  switch (k) {
    case ScoreKind::kLogit: return "logit";
    case ScoreKind::kLogProbability: return "log-probability";
    case ScoreKind::kLogOdds: return "log-odds";
  }
  return "unknown";
}

inline ScoreKind parse_score_kind(std::string_view s) {
  if (s == "logit") return ScoreKind::kLogit;
  if (s == "log-probability" || s == "log_probability") return ScoreKind::kLogProbability;
  if (s == "log-odds" || s == "log_odds") return ScoreKind::kLogOdds;
  fail(ErrorCode::kInvalidArgument, "unknown score kind '" + std::string(s) + "'");
}

/// A model reduced to one real per input: the chosen output for `target`.
/// Must be deterministic and independent of how inputs are batched.
class ModelScorer {
 public:
  virtual ~ModelScorer() = default;
  virtual std::vector<double> score_batch(std::span<const Tensor> inputs) = 0;
  virtual std::string descriptor() const = 0;
  virtual bool concurrency_safe() const { return true; }
  virtual ScoreKind score_kind() const { return ScoreKind::kLogit; }
  virtual int target() const { return 0; }
};

class ConstantScorer final : public ModelScorer {
 public:
  explicit ConstantScorer(double value) : value_(value) {}
  std::vector<double> score_batch(std::span<const Tensor> inputs) override {
    return std::vector<double>(inputs.size(), value_);
  }
  std::string descriptor() const override { return "constant(" + detail::hex64(detail::hash_values(std::vector<double>{value_})) + ")"; }

 private:
  double value_;
};

/// bias + <w, x> over the flattened CHW tensor.
class LinearScorer : public ModelScorer {
 public:
  LinearScorer(std::vector<double> weights, double bias = 0.0) : w_(std::move(weights)), bias_(bias) {}

  std::vector<double> score_batch(std::span<const Tensor> inputs) override {
    std::vector<double> out;
    out.reserve(inputs.size());
    for (const auto& t : inputs) out.push_back(score_one(t));
    return out;
  }
  std::string descriptor() const override {
    return "linear(" + detail::hex64(hash_combine(detail::hash_values(w_), detail::hash_values(std::vector<double>{bias_}))) + ")";
  }

 protected:
  double score_one(const Tensor& t) const {
    if (t.size() != w_.size()) {
      fail(ErrorCode::kShapeMismatch, "scorer expects " + std::to_string(w_.size()) + " values, got " +
                                          std::to_string(t.size()));
    }
    double s = bias_;
    for (std::size_t k = 0; k < w_.size(); ++k) s += w_[k] * t.data[k];
    return s;
  }

  std::vector<double> w_;
  double bias_;
};

/// Linear part plus one product term coef * x[a] * x[b] (flat CHW indices).
class BilinearScorer final : public LinearScorer {
 public:
  BilinearScorer(std::vector<double> weights, std::size_t a, std::size_t b, double coef, double bias = 0.0)
      : LinearScorer(std::move(weights), bias), a_(a), b_(b), coef_(coef) {
    if (a >= w_.size() || b >= w_.size()) fail(ErrorCode::kInvalidArgument, "product term index out of range");
  }

  std::vector<double> score_batch(std::span<const Tensor> inputs) override {
    std::vector<double> out;
    out.reserve(inputs.size());
    for (const auto& t : inputs) out.push_back(score_one(t) + coef_ * t.data[a_] * t.data[b_]);
    return out;
  }
  std::string descriptor() const override {
    return "bilinear(" + LinearScorer::descriptor() + "," + std::to_string(a_) + "," + std::to_string(b_) + "," +
           detail::hex64(detail::hash_values(std::vector<double>{coef_})) + ")";
  }

 private:
  std::size_t a_, b_;
  double coef_;
};

/// The seeded two-layer network applied to the flattened CHW tensor.
class MlpScorer final : public ModelScorer {
 public:
  explicit MlpScorer(BuiltinScorer net) : net_(std::move(net)) {}
  MlpScorer(std::uint64_t seed, int input_dim, int hidden = kDefaultHiddenWidth) : net_(seed, input_dim, hidden) {}

  std::vector<double> score_batch(std::span<const Tensor> inputs) override {
    std::vector<double> out;
    out.reserve(inputs.size());
    for (const auto& t : inputs) out.push_back(net_.score(t.data));
    return out;
  }
  std::string descriptor() const override { return net_.descriptor(); }

 private:
  BuiltinScorer net_;
};

// ---------------------------------------------------------------------------
// The game

inline constexpr std::size_t kImageScoreChunk = 256;

class ImageGame final : public GameEvaluator {
 public:
  ImageGame(Tensor x, std::shared_ptr<ModelScorer> scorer, GridSpec spec, BaselinePolicy baseline)
      : x_(std::move(x)), scorer_(std::move(scorer)), spec_(std::move(spec)), baseline_(std::move(baseline)) {
    if (!scorer_) fail(ErrorCode::kInvalidArgument, "image game needs a scorer");
    x_.check_finite();
    detail::check_grid_fits(x_, spec_);
    base_ = baseline_.resolve(x_);
    descriptor_ = "image(x=" + detail::hex64(x_.digest()) + ",target=" + std::to_string(scorer_->target()) +
                  ",kind=" + std::string(to_string(scorer_->score_kind())) + ",baseline=" + baseline_.descriptor() +
                  "," + spec_.descriptor() + ",scorer=" + scorer_->descriptor() + ")";
  }

  int num_players() const override { return spec_.num_players(); }

  std::vector<double> evaluate_batch(std::span<const Coalition> coalitions) override {
    std::vector<double> out;
    out.reserve(coalitions.size());
    std::vector<Tensor> masked;
    for (std::size_t begin = 0; begin < coalitions.size(); begin += kImageScoreChunk) {
      const std::size_t end = std::min(coalitions.size(), begin + kImageScoreChunk);
      masked.resize(end - begin);
      for (std::size_t k = begin; k < end; ++k) {
        if (coalitions[k].num_players() != num_players()) {
          fail(ErrorCode::kInvalidArgument, "coalition built for a different player count");
        }
        detail::mask_into(x_, base_, coalitions[k], spec_, masked[k - begin]);
      }
      std::vector<double> scores;
      try {
        scores = scorer_->score_batch(masked);
      } catch (const Error&) {
        throw;
      } catch (const std::exception& e) {
        fail(ErrorCode::kScorerFailure, e.what());
      }
      if (scores.size() != masked.size()) {
        fail(ErrorCode::kScorerFailure, "scorer returned " + std::to_string(scores.size()) + " scores for " +
                                            std::to_string(masked.size()) + " inputs");
      }
      for (double v : scores) {
        if (!std::isfinite(v)) fail(ErrorCode::kScorerFailure, "scorer returned a non-finite score");
        out.push_back(v);
      }
    }
    return out;
  }

  std::string descriptor() const override { return descriptor_; }
  bool concurrency_safe() const override { return scorer_->concurrency_safe(); }

  const Tensor& input() const { return x_; }
  const GridSpec& grid() const { return spec_; }
  const BaselinePolicy& baseline() const { return baseline_; }
  const ModelScorer& scorer() const { return *scorer_; }

 private:
  Tensor x_;
  std::shared_ptr<ModelScorer> scorer_;
  GridSpec spec_;
  BaselinePolicy baseline_;
  Tensor base_;
  std::string descriptor_;
};

inline std::unique_ptr<ImageGame> make_image_game(Tensor x, std::shared_ptr<ModelScorer> scorer, GridSpec spec,
                                                  BaselinePolicy baseline = BaselinePolicy::channel_mean()) {
  return std::make_unique<ImageGame>(std::move(x), std::move(scorer), std::move(spec), std::move(baseline));
}

/// Seeded test image with values in [0, 1).
inline Tensor seeded_image(std::uint64_t seed, int channels, int height, int width) {
  Tensor t(channels, height, width);
  SplitMix64 rng(hash_combine(seed, 0x696d616765ULL));
  for (auto& v : t.data) v = rng.uniform01();
  return t;
}

}  // namespace moi

#endif  // MOI_IMAGE_GAME_HPP_
