#include <gtest/gtest.h>

#include <random>

#include "bevgrid/completion.hpp"
#include "brute_force.hpp"

using namespace bevgrid;

namespace {

RasterSet seed_raster(int w, int h, int sx, int sy, ClassId label = 4) {
  RasterSet r = RasterSet::nodata(w, h);
  const std::size_t i = r.pixel(sx, sy);
  r.mask[i] = 1;
  r.label[i] = label;
  r.alt[i] = 2.5;
  r.rgb[3 * i] = 10;
  r.rgb[3 * i + 1] = 20;
  r.rgb[3 * i + 2] = 30;
  r.winner_index[i] = 0;
  return r;
}

RasterSet random_raster(std::mt19937_64& rng, double fill, bool with_unlabeled = false) {
  std::uniform_int_distribution<int> dim(1, 40), lab(0, 12), col(0, 255);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  RasterSet r = RasterSet::nodata(dim(rng), dim(rng));
  for (std::size_t i = 0; i < r.pixel_count(); ++i) {
    if (u(rng) >= fill) continue;
    r.mask[i] = 1;
    r.label[i] = with_unlabeled && u(rng) < 0.1 ? kUnlabeled : static_cast<ClassId>(lab(rng));
    r.alt[i] = u(rng) * 30.0;
    for (int c = 0; c < 3; ++c) r.rgb[3 * i + c] = static_cast<std::uint8_t>(col(rng));
    r.winner_index[i] = i;
  }
  return r;
}

bf::Image to_image(const RasterSet& r) {
  bf::Image img;
  img.w = r.width;
  img.h = r.height;
  for (std::size_t i = 0; i < r.pixel_count(); ++i) {
    img.rgb.push_back({r.rgb[3 * i], r.rgb[3 * i + 1], r.rgb[3 * i + 2]});
    img.alt.push_back(r.alt[i]);
    img.label.push_back(r.label[i]);
    img.mask.push_back(r.mask[i] != 0);
  }
  return img;
}

void expect_same(const RasterSet& r, const bf::Image& img) {
  for (std::size_t i = 0; i < r.pixel_count(); ++i) {
    ASSERT_EQ(r.mask[i] != 0, img.mask[i]) << i;
    if (!img.mask[i]) continue;
    EXPECT_EQ(r.label[i], img.label[i]) << i;
    EXPECT_EQ(r.alt[i], img.alt[i]) << i;
    for (int c = 0; c < 3; ++c) EXPECT_EQ(r.rgb[3 * i + c], img.rgb[i][c]) << i;
  }
}

}  // namespace

TEST(Completion, SingleSeedGrowsIntoSquare) {
  for (int k = 0; k <= 6; ++k) {
    const RasterSet out = complete(seed_raster(31, 31, 15, 15), k, 3);
    EXPECT_EQ(out.masked_count(), static_cast<std::size_t>((2 * k + 1) * (2 * k + 1))) << k;
    for (int y = 0; y < 31; ++y) {
      for (int x = 0; x < 31; ++x) {
        const bool inside = std::abs(x - 15) <= k && std::abs(y - 15) <= k;
        const std::size_t i = out.pixel(x, y);
        ASSERT_EQ(out.mask[i] != 0, inside);
        if (inside) {
          EXPECT_EQ(out.label[i], 4);
          EXPECT_EQ(out.alt[i], 2.5);
          EXPECT_EQ(out.rgb[3 * i + 2], 30);
        }
      }
    }
  }
}

TEST(Completion, LargerKernelGrowsFaster) {
  const RasterSet out = complete(seed_raster(41, 41, 20, 20), 2, 5);
  EXPECT_EQ(out.masked_count(), 9u * 9u);
}

TEST(Completion, ObservedPixelsNeverChange) {
  std::mt19937_64 rng(99);
  for (int t = 0; t < 100; ++t) {
    const RasterSet in = random_raster(rng, 0.05 + 0.5 * (t % 7) / 7.0, t % 2 == 0);
    const RasterSet out = complete(in, 1 + t % 5, t % 3 == 0 ? 5 : 3,
                                   t % 2 ? LabelStrategy::kMaxId : LabelStrategy::kMajority);
    for (std::size_t i = 0; i < in.pixel_count(); ++i) {
      if (!in.mask[i]) continue;
      ASSERT_TRUE(out.mask[i]);
      ASSERT_EQ(out.label[i], in.label[i]);
      ASSERT_EQ(out.alt[i], in.alt[i]);
      ASSERT_EQ(out.winner_index[i], in.winner_index[i]);
      for (int c = 0; c < 3; ++c) ASSERT_EQ(out.rgb[3 * i + c], in.rgb[3 * i + c]);
    }
    for (std::size_t i = 0; i < in.pixel_count(); ++i) {
      if (!in.mask[i]) ASSERT_EQ(out.winner_index[i], kNoWinner);
    }
  }
}

TEST(Completion, MatchesNaiveReference) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 60; ++t) {
    const RasterSet in = random_raster(rng, 0.1, t % 3 == 0);
    const int iters = t % 4;
    const int kernel = t % 2 ? 3 : 5;
    const bool majority = t % 5 != 0;
    const RasterSet out =
        complete(in, iters, kernel, majority ? LabelStrategy::kMajority : LabelStrategy::kMaxId);
    expect_same(out, bf::complete(to_image(in), iters, kernel, majority));
  }
}

TEST(Completion, DenseRasterIsFixedPoint) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    const RasterSet dense = random_raster(rng, 1.0);
    EXPECT_EQ(complete(dense, 3, 3), dense);
    const RasterSet sparse = random_raster(rng, 0.2);
    const int n = fixpoint_iterations(sparse, 3);
    const RasterSet full = complete(sparse, n, 3);
    EXPECT_EQ(full.masked_count(), full.pixel_count());
    EXPECT_EQ(complete(full, 4, 3), full);
    if (n > 0) EXPECT_LT(complete(sparse, n - 1, 3).masked_count(), full.pixel_count());
  }
}

TEST(Completion, MajorityAndMaxIdStrategies) {
  RasterSet r = RasterSet::nodata(3, 3);
  const auto set = [&](int x, int y, ClassId l) {
    const std::size_t i = r.pixel(x, y);
    r.mask[i] = 1;
    r.label[i] = l;
  };
  set(0, 0, 7);
  set(1, 0, 2);
  set(2, 0, 2);
  set(0, 1, 9);
  set(0, 2, 7);
  const std::size_t centre = r.pixel(1, 1);
  EXPECT_EQ(complete(r, 1, 3, LabelStrategy::kMajority).label[centre], 2);  // 2 and 7 tie
  EXPECT_EQ(complete(r, 1, 3, LabelStrategy::kMaxId).label[centre], 9);
}

TEST(Completion, SynchronousUpdate) {
  // A row seeded at the left edge grows exactly one pixel per iteration.
  RasterSet r = seed_raster(10, 1, 0, 0);
  EXPECT_EQ(complete(r, 1, 3).masked_count(), 2u);
  EXPECT_EQ(complete(r, 4, 3).masked_count(), 5u);
}

TEST(Completion, ChannelwiseMax) {
  RasterSet r = RasterSet::nodata(3, 1);
  r.mask[0] = r.mask[2] = 1;
  r.rgb = {200, 10, 50, 0, 0, 0, 100, 90, 60};
  r.alt = {1.0, 0.0, 4.0};
  r.label = {1, kUnlabeled, 1};
  const RasterSet out = complete(r, 1, 3);
  EXPECT_EQ(out.rgb[3], 200);
  EXPECT_EQ(out.rgb[4], 90);
  EXPECT_EQ(out.rgb[5], 60);
  EXPECT_EQ(out.alt[1], 4.0);
}

TEST(Completion, RejectsBadParameters) {
  const RasterSet r = seed_raster(5, 5, 2, 2);
  EXPECT_THROW(complete(r, 1, 4), ConfigError);
  EXPECT_THROW(complete(r, 1, 1), ConfigError);
  EXPECT_THROW(complete(r, -1, 3), ConfigError);
  EXPECT_THROW(fixpoint_iterations(RasterSet::nodata(4, 4), 3), Error);
  EXPECT_EQ(fixpoint_iterations(r, 3), 2);
  EXPECT_EQ(fixpoint_iterations(r, 5), 1);
}

TEST(Completion, StrategyNames) {
  EXPECT_EQ(parse_label_strategy("majority"), LabelStrategy::kMajority);
  EXPECT_EQ(parse_label_strategy("max-id"), LabelStrategy::kMaxId);
  EXPECT_FALSE(parse_label_strategy("max"));
  EXPECT_EQ(to_string(LabelStrategy::kMaxId), "max-id");
}
