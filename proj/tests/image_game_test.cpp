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


#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "moi/builtin_scorer.hpp"
#include "moi/image_game.hpp"
#include "moi/interaction.hpp"
#include "oracle.hpp"
#include "table_games.hpp"

namespace moi {
namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("moi_image_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

TEST(PartitionTest, OnePixelCellsAtFullResolution) {
  const auto spec = partition(32, 32, 32);
  ASSERT_EQ(spec.num_players(), 1024);
  for (int id = 0; id < 1024; ++id) {
    const auto r = spec.cell(id);
    EXPECT_EQ(r.y0, id / 32);
    EXPECT_EQ(r.x0, id % 32);
    EXPECT_EQ(r.y1 - r.y0, 1);
    EXPECT_EQ(r.x1 - r.x0, 1);
  }
}

TEST(PartitionTest, QuadrantsOfEightByEight) {
  const auto spec = partition(8, 8, 2);
  ASSERT_EQ(spec.num_players(), 4);
  EXPECT_EQ(spec.cell(0), (CellRect{0, 4, 0, 4}));
  EXPECT_EQ(spec.cell(1), (CellRect{0, 4, 4, 8}));
  EXPECT_EQ(spec.cell(2), (CellRect{4, 8, 0, 4}));
  EXPECT_EQ(spec.cell(3), (CellRect{4, 8, 4, 8}));
}

TEST(PartitionTest, EdgeReplicateClipsLastCell) {
  // ceil(10 / 3) = 4: cells start at 0, 4, 8 and the last one stops at 10.
  const auto spec = partition(10, 10, 3, PadPolicy::kEdgeReplicate);
  const int starts[] = {0, 4, 8};
  const int ends[] = {4, 8, 10};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      EXPECT_EQ(spec.cell(r * 3 + c), (CellRect{starts[r], ends[r], starts[c], ends[c]}));
    }
  }
}

TEST(PartitionTest, AbsorbGivesRemainderToLastCell) {
  const auto spec = partition(10, 7, 3);
  EXPECT_EQ(spec.row_bounds, (std::vector<int>{0, 3, 6, 10}));
  EXPECT_EQ(spec.col_bounds, (std::vector<int>{0, 2, 4, 7}));
}

TEST(PartitionTest, CellsTileTheImageExactly) {
  for (auto pad : {PadPolicy::kAbsorb, PadPolicy::kEdgeReplicate}) {
    for (int h = 1; h <= 13; ++h) {
      for (int g = 1; g <= h; ++g) {
        GridSpec spec;
        try {
          spec = partition(h, h, g, pad);
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::kBadGrid);
          EXPECT_EQ(pad, PadPolicy::kEdgeReplicate);
          continue;
        }
        std::vector<int> hits(static_cast<std::size_t>(h * h), 0);
        for (int id = 0; id < spec.num_players(); ++id) {
          const auto r = spec.cell(id);
          ASSERT_LT(r.y0, r.y1);
          ASSERT_LT(r.x0, r.x1);
          for (int y = r.y0; y < r.y1; ++y) {
            for (int x = r.x0; x < r.x1; ++x) ++hits[static_cast<std::size_t>(y * h + x)];
          }
        }
        for (int k : hits) ASSERT_EQ(k, 1) << "h=" << h << " g=" << g;
      }
    }
  }
}

TEST(PartitionTest, RejectsOversizedGrid) {
  try {
    partition(4, 8, 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBadGrid);
  }
  EXPECT_THROW(partition(4, 4, 0), Error);
  // ceil(5 / 4) = 2 would start the fourth cell at row 6, past the edge.
  EXPECT_NO_THROW(partition(10, 10, 4, PadPolicy::kEdgeReplicate));
  EXPECT_THROW(partition(5, 5, 4, PadPolicy::kEdgeReplicate), Error);
}

TEST(ApplyMaskTest, FullCoalitionReturnsInput) {
  const auto x = seeded_image(3, 3, 8, 8);
  const auto spec = partition(x, 4);
  for (auto b : {BaselinePolicy::zero(), BaselinePolicy::channel_mean(), BaselinePolicy::constant({0.5})}) {
    EXPECT_EQ(apply_mask(x, Coalition::full(16), spec, b), x);
  }
}

TEST(ApplyMaskTest, EmptyCoalitionWithZeroBaselineIsZero) {
  const auto x = seeded_image(4, 2, 6, 6);
  const auto out = apply_mask(x, Coalition(9), partition(x, 3), BaselinePolicy::zero());
  double norm = 0;
  for (double v : out.data) norm += v * v;
  EXPECT_EQ(norm, 0.0);
}

TEST(ApplyMaskTest, ChannelMeanOutsideTopLeftQuadrant) {
  const auto x = seeded_image(5, 3, 8, 8);
  const auto out = apply_mask(x, Coalition::of(4, {0}), partition(x, 2), BaselinePolicy::channel_mean());
  for (int c = 0; c < 3; ++c) {
    double mean = 0;
    for (int y = 0; y < 8; ++y) {
      for (int xx = 0; xx < 8; ++xx) mean += x.at(c, y, xx);
    }
    mean /= 64;
    for (int y = 0; y < 8; ++y) {
      for (int xx = 0; xx < 8; ++xx) {
        if (y < 4 && xx < 4) {
          EXPECT_EQ(out.at(c, y, xx), x.at(c, y, xx));
        } else {
          EXPECT_NEAR(out.at(c, y, xx), mean, 1e-15);
        }
      }
    }
  }
}

TEST(ApplyMaskTest, IdempotentInCoalition) {
  const auto x = seeded_image(6, 2, 9, 9);
  const auto spec = partition(x, 3);
  SplitMix64 rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto s = Coalition::from_word(9, rng.below(512));
    for (auto b : {BaselinePolicy::zero(), BaselinePolicy::channel_mean()}) {
      const auto once = apply_mask(x, s, spec, b);
      // Masking the masked image against the original baseline.
      const auto base = b.resolve(x);
      const auto twice = apply_mask(once, s, spec, BaselinePolicy::reference_tensor(base));
      EXPECT_EQ(once, twice);
    }
  }
}

TEST(ApplyMaskTest, ReferenceBaselineMustMatchShape) {
  const auto x = seeded_image(1, 1, 4, 4);
  try {
    apply_mask(x, Coalition(4), partition(x, 2), BaselinePolicy::reference_tensor(Tensor(1, 4, 5)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
  const Tensor ref = seeded_image(2, 1, 4, 4);
  const auto out = apply_mask(x, Coalition(4), partition(x, 2), BaselinePolicy::reference_tensor(ref));
  EXPECT_EQ(out, ref);
}

TEST(ApplyMaskTest, ConstantBaselinePerChannel) {
  const auto x = seeded_image(1, 2, 4, 4);
  const auto out = apply_mask(x, Coalition(4), partition(x, 2), BaselinePolicy::constant({0.25, -1.0}));
  for (int y = 0; y < 4; ++y) {
    EXPECT_EQ(out.at(0, y, 1), 0.25);
    EXPECT_EQ(out.at(1, y, 2), -1.0);
  }
  EXPECT_THROW(apply_mask(x, Coalition(4), partition(x, 2), BaselinePolicy::constant({1, 2, 3})), Error);
}

TEST(ImageGameTest, ConstantScorerHasNoInteractions) {
  auto game = make_image_game(seeded_image(2, 1, 6, 6), std::make_shared<ConstantScorer>(0.7), partition(6, 6, 2));
  for (std::uint64_t s = 0; s < 16; ++s) EXPECT_EQ(game->evaluate(Coalition::from_word(4, s)), 0.7);
  for (int m = 0; m <= 2; ++m) EXPECT_EQ(multi_order_exact(*game, 0, 3, m).mean, 0.0);
}

TEST(ImageGameTest, LinearScorerIsAdditive) {
  for (int g = 2; g <= 4; ++g) {
    const auto x = seeded_image(10 + g, 2, 8, 8);
    SplitMix64 rng(g);
    std::vector<double> w(x.size());
    for (auto& v : w) v = rng.uniform(-2, 2);
    auto game = make_image_game(x, std::make_shared<LinearScorer>(w, 0.3), partition(x, g));
    const int n = g * g;
    const auto table = test::tabulate(*game);
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        for (int m = 0; m <= n - 2; ++m) {
          ASSERT_NEAR(oracle::order_interaction(table, n, i, j, m), 0.0, 1e-9);
        }
      }
    }
  }
}

TEST(ImageGameTest, BilinearScorerInteractsOnlyOnItsCellPair) {
  const auto x = seeded_image(21, 1, 9, 9);
  const auto spec = partition(x, 3);
  SplitMix64 rng(5);
  std::vector<double> w(x.size());
  for (auto& v : w) v = rng.uniform(-1, 1);
  // Pixel (1, 1) is in cell 0, pixel (7, 4) in cell 7.
  const std::size_t a = x.index(0, 1, 1), b = x.index(0, 7, 4);
  const double coef = 2.5;
  const auto baseline = BaselinePolicy::channel_mean();
  auto game = make_image_game(x, std::make_shared<BilinearScorer>(w, a, b, coef), spec, baseline);
  const auto base = baseline.resolve(x);
  const double expected = coef * (x.data[a] - base.data[a]) * (x.data[b] - base.data[b]);
  ASSERT_GT(std::abs(expected), 1e-3);

  const auto table = test::tabulate(*game);
  for (int i = 0; i < 9; ++i) {
    for (int j = i + 1; j < 9; ++j) {
      const bool hot = i == 0 && j == 7;
      for (int m = 0; m <= 7; ++m) {
        const double want = hot ? expected : 0.0;
        EXPECT_NEAR(multi_order_exact(*game, i, j, m).mean, want, 1e-9) << i << "," << j << " m=" << m;
        EXPECT_NEAR(oracle::order_interaction(table, 9, i, j, m), want, 1e-9);
      }
    }
  }
}

TEST(ImageGameTest, ScoresMatchDirectScorerCalls) {
  const auto x = seeded_image(8, 3, 12, 12);
  auto scorer = std::make_shared<MlpScorer>(99, static_cast<int>(x.size()));
  const auto spec = partition(x, 4);
  auto game = make_image_game(x, scorer, spec);
  SplitMix64 rng(3);
  std::vector<Coalition> batch;
  for (int k = 0; k < 600; ++k) batch.push_back(Coalition::from_word(16, rng.below(1 << 16)));
  const auto scores = game->evaluate_batch(batch);
  ASSERT_EQ(scores.size(), batch.size());
  for (std::size_t k = 0; k < batch.size(); k += 37) {
    const auto masked = apply_mask(x, batch[k], spec, BaselinePolicy::channel_mean());
    EXPECT_EQ(scores[k], scorer->score_batch(std::span<const Tensor>(&masked, 1)).front());
  }
  // Batch-size independence.
  for (std::size_t k = 0; k < batch.size(); k += 53) EXPECT_EQ(game->evaluate(batch[k]), scores[k]);
}

TEST(ImageGameTest, DescriptorTracksInputsAndSettings) {
  const auto x = seeded_image(1, 1, 8, 8);
  auto scorer = std::make_shared<ConstantScorer>(1.0);
  const auto d = make_image_game(x, scorer, partition(x, 2))->descriptor();
  EXPECT_EQ(d, make_image_game(x, scorer, partition(x, 2))->descriptor());
  EXPECT_NE(d, make_image_game(seeded_image(2, 1, 8, 8), scorer, partition(x, 2))->descriptor());
  EXPECT_NE(d, make_image_game(x, scorer, partition(x, 4))->descriptor());
  EXPECT_NE(d, make_image_game(x, scorer, partition(x, 2), BaselinePolicy::zero())->descriptor());
}

class ThrowingScorer final : public ModelScorer {
 public:
  std::vector<double> score_batch(std::span<const Tensor>) override { throw std::runtime_error("model exploded"); }
  std::string descriptor() const override { return "throwing"; }
};

class ShortScorer final : public ModelScorer {
 public:
  std::vector<double> score_batch(std::span<const Tensor>) override { return {1.0}; }
  std::string descriptor() const override { return "short"; }
};

TEST(ImageGameTest, ScorerFailuresPropagate) {
  const auto x = seeded_image(1, 1, 4, 4);
  const std::vector<std::shared_ptr<ModelScorer>> scorers{std::make_shared<ThrowingScorer>(),
                                                          std::make_shared<ShortScorer>()};
  for (const auto& s : scorers) {
    auto game = make_image_game(x, s, partition(x, 2));
    const std::vector<Coalition> batch{Coalition(4), Coalition::full(4)};
    try {
      game->evaluate_batch(batch);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kScorerFailure);
    }
  }
}

TEST(ImageGameTest, RejectsNonFiniteInput) {
  Tensor x(1, 2, 2);
  x.data[1] = std::nan("");
  EXPECT_THROW(make_image_game(x, std::make_shared<ConstantScorer>(0.0), partition(x, 2)), Error);
}

TEST(TensorIoTest, RawRoundTripBothLayouts) {
  const auto dir = scratch_dir("raw");
  Tensor x = seeded_image(7, 3, 5, 4);
  for (auto& v : x.data) v = static_cast<float>(v);  // exact in binary32
  write_tensor_raw(dir / "x.f32", x);
  EXPECT_EQ(read_tensor(dir / "x.f32"), x);

  // Same values written interleaved.
  std::vector<unsigned char> bytes(x.size() * 4);
  std::size_t k = 0;
  for (int y = 0; y < 5; ++y) {
    for (int xx = 0; xx < 4; ++xx) {
      for (int c = 0; c < 3; ++c) detail::store_f32le(static_cast<float>(x.at(c, y, xx)), &bytes[4 * k++]);
    }
  }
  std::ofstream(dir / "y.f32", std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                                        static_cast<std::streamsize>(bytes.size()));
  std::ofstream(dir / "y.f32.json") << R"({"format":"f32le","channels":3,"height":5,"width":4,"layout":"HWC"})";
  EXPECT_EQ(read_tensor(dir / "y.f32"), x);
}

TEST(TensorIoTest, RawRejectsWrongLength) {
  const auto dir = scratch_dir("short");
  std::ofstream(dir / "x.f32", std::ios::binary) << "abcd";
  std::ofstream(dir / "x.f32.json") << R"({"format":"f32le","channels":1,"height":2,"width":2})";
  try {
    read_tensor(dir / "x.f32");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormatError);
  }
  EXPECT_THROW(read_tensor(dir / "missing.f32"), Error);
}

TEST(TensorIoTest, CsvSingleChannel) {
  const auto dir = scratch_dir("csv");
  std::ofstream(dir / "x.csv") << "0.5,1,2\n-3,4.25,1e-3\n\n";
  const auto t = read_tensor(dir / "x.csv");
  ASSERT_EQ(t.channels, 1);
  ASSERT_EQ(t.height, 2);
  ASSERT_EQ(t.width, 3);
  EXPECT_EQ(t.at(0, 1, 1), 4.25);
  EXPECT_EQ(t.at(0, 1, 2), 1e-3);
  std::ofstream(dir / "bad.csv") << "1,2\n3\n";
  EXPECT_THROW(read_tensor(dir / "bad.csv"), Error);
  std::ofstream(dir / "nan.csv") << "1,nan\n";
  EXPECT_THROW(read_tensor(dir / "nan.csv"), Error);
}

TEST(BuiltinScorerTest, FiniteAtEndsForManySeeds) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    BuiltinVectorGame game(seed, 16);
    EXPECT_TRUE(std::isfinite(game.evaluate(Coalition(16))));
    EXPECT_TRUE(std::isfinite(game.evaluate(Coalition::full(16))));
  }
}

TEST(BuiltinScorerTest, SeedDeterminesWeights) {
  BuiltinScorer a(5, 10), b(5, 10), c(6, 10);
  const auto x = seeded_input(1, 10);
  EXPECT_EQ(a.score(x), b.score(x));
  EXPECT_NE(a.score(x), c.score(x));
  EXPECT_THROW(a.score(seeded_input(1, 9)), Error);
}

TEST(BuiltinScorerTest, ZeroMaskedElementsMatchManualInput) {
  BuiltinVectorGame game(11, 8);
  const auto s = Coalition::of(8, {1, 4, 5});
  std::vector<double> manual(8, 0.0);
  for (int k : {1, 4, 5}) manual[static_cast<std::size_t>(k)] = game.input()[static_cast<std::size_t>(k)];
  EXPECT_EQ(game.evaluate(s), game.network().score(manual));
}

}  // namespace
}  // namespace moi
