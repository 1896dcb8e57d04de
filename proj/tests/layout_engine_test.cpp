#include <gtest/gtest.h>

#include <algorithm>

#include "testkit.hpp"

using namespace recomb;
using testkit::monte_carlo_iou;
using testkit::random_valid_box;
using testkit::well_separated_layout;

TEST(Iou, HandValues) {
  EXPECT_DOUBLE_EQ(iou({0, 0, 0.5, 0.5}, {0, 0, 0.5, 0.5}), 1.0);
  EXPECT_DOUBLE_EQ(iou({0, 0, 0.5, 0.5}, {0.5, 0.5, 0.5, 0.5}), 0.0);  // corner contact
  // half overlap: inter 0.125, union 0.375
  EXPECT_NEAR(iou({0, 0, 0.5, 0.5}, {0.25, 0, 0.5, 0.5}), 1.0 / 3, 1e-12);
  // containment: inter = inner area
  EXPECT_NEAR(iou({0, 0, 1, 1}, {0.25, 0.25, 0.5, 0.5}), 0.25, 1e-12);
}

TEST(Iou, MatchesMonteCarloOracle) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    const BBox a = random_valid_box(rng);
    BBox b = random_valid_box(rng);
    if (i % 3 == 0) b = clamp_shift({a.x + 0.05, a.y - 0.05, a.w, a.h});  // force overlap often
    const double oracle = monte_carlo_iou(a, b, 200000, rng);
    EXPECT_NEAR(iou(a, b), oracle, 1e-2) << "pair " << i;
  }
}

TEST(Iou, SymmetricAndBounded) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const BBox a = random_valid_box(rng), b = random_valid_box(rng);
    const double v = iou(a, b);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_DOUBLE_EQ(v, iou(b, a));
  }
}

TEST(ClampShift, KeepsSizeMovesOrigin) {
  const BBox c = clamp_shift({0.8, -0.1, 0.3, 0.2});
  EXPECT_NEAR(c.x, 0.7, 1e-12);
  EXPECT_DOUBLE_EQ(c.y, 0.0);
  EXPECT_DOUBLE_EQ(c.w, 0.3);
  EXPECT_DOUBLE_EQ(c.h, 0.2);
  EXPECT_TRUE(needs_clamp({0.8, 0, 0.3, 0.2}));
  EXPECT_FALSE(needs_clamp({0.5, 0, 0.3, 0.2}));
  const BBox big = clamp_shift({0.2, 0.2, 1.5, 0.0}, 0.01);
  EXPECT_DOUBLE_EQ(big.w, 1.0);
  EXPECT_DOUBLE_EQ(big.x, 0.0);
  EXPECT_DOUBLE_EQ(big.h, 0.01);
  EXPECT_FALSE(validate_bbox(big));
}

TEST(LayoutSimilarity, HandDerivedValue) {
  // C1 coincides with O1. C2's centroid (0.5, 0.5) is equidistant from both
  // originals (sqrt(0.125)) and overlaps each by 0.0625 / 0.4375 = 1/7.
  // Distances {0, d} normalize to {0, 1}: total = (1 + 1) + (1/7 + 0).
  const std::vector<BBox> original{{0, 0, 0.5, 0.5}, {0.5, 0.5, 0.5, 0.5}};
  const std::vector<BBox> candidate{{0, 0, 0.5, 0.5}, {0.25, 0.25, 0.5, 0.5}};
  EXPECT_NEAR(layout_similarity(candidate, original), 2.0 + 1.0 / 7.0, 1e-12);
}

TEST(LayoutSimilarity, EqualDistancesCollapseToZero) {
  // both candidates sit 0.1 right of their original: normalized distance 0
  const std::vector<BBox> original{{0, 0, 0.2, 0.2}, {0.6, 0.6, 0.2, 0.2}};
  const std::vector<BBox> candidate{{0.1, 0, 0.2, 0.2}, {0.7, 0.6, 0.2, 0.2}};
  // IoU of each: inter 0.1*0.2 = 0.02, union 0.06
  EXPECT_NEAR(layout_similarity(candidate, original), 2 * (1.0 / 3) + 2.0, 1e-12);
}

TEST(LayoutSimilarity, SelfSimilarityIsTwiceTheCount) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 1000; ++i) {
    const int n = 1 + i % 10;
    const auto layout = well_separated_layout(n, rng);
    EXPECT_DOUBLE_EQ(layout_similarity(layout, layout), 2.0 * n);
  }
}

TEST(LayoutSimilarity, RejectsEmpty) {
  const std::vector<BBox> one{{0, 0, 0.5, 0.5}};
  EXPECT_THROW(layout_similarity({}, one), Error);
  EXPECT_THROW(layout_similarity(one, {}), Error);
}

namespace {

Arrangement arrangement_of(std::vector<BBox> boxes) {
  Arrangement a;
  a.boxes = std::move(boxes);
  return a;
}

}  // namespace

TEST(Variator, OutputsValidAndRankMonotone) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const int m = 1 + trial % 10;
    const auto a = arrangement_of(well_separated_layout(m, rng));
    VariatorParams p;
    p.rng_seed = 100 + trial;
    const int n = 1 + (trial * 7) % 12;  // below, equal to and above m
    const auto ranked = vary_arrangement(a, n, p);
    ASSERT_EQ(ranked.size(), 5u);
    for (std::size_t r = 0; r < ranked.size(); ++r) {
      ASSERT_EQ(ranked[r].boxes.size(), static_cast<std::size_t>(n));
      for (const auto& b : ranked[r].boxes) EXPECT_FALSE(validate_bbox(b)) << validate_bbox(b).value_or("");
      EXPECT_DOUBLE_EQ(ranked[r].similarity, layout_similarity(ranked[r].boxes, a.boxes));
      if (r > 0) {
        EXPECT_GE(ranked[r - 1].similarity, ranked[r].similarity);
      }
    }
  }
}

TEST(Variator, ZeroJitterIsAFixpoint) {
  std::mt19937_64 rng(9);
  for (int m = 1; m <= 10; ++m) {
    const auto a = arrangement_of(well_separated_layout(m, rng));
    VariatorParams p;
    p.jitter_px = 0;
    p.rng_seed = 1;
    for (const auto& r : vary_arrangement(a, m, p)) {
      EXPECT_DOUBLE_EQ(r.similarity, 2.0 * m);
      auto got = r.boxes;
      auto want = a.boxes;
      auto key = [](const BBox& l, const BBox& rr) { return std::tie(l.x, l.y, l.w, l.h) < std::tie(rr.x, rr.y, rr.w, rr.h); };
      std::sort(got.begin(), got.end(), key);
      std::sort(want.begin(), want.end(), key);
      EXPECT_EQ(got, want);
    }
  }
}

TEST(Variator, SeedDeterminism) {
  const auto a = arrangement_of({{0.1, 0.1, 0.3, 0.3}, {0.5, 0.5, 0.4, 0.2}, {0.2, 0.6, 0.2, 0.3}});
  VariatorParams p;
  p.rng_seed = 77;
  const auto r1 = vary_arrangement(a, 2, p);
  const auto r2 = vary_arrangement(a, 2, p);
  ASSERT_EQ(r1.size(), r2.size());
  for (std::size_t i = 0; i < r1.size(); ++i) EXPECT_EQ(r1[i].boxes, r2[i].boxes);
  p.rng_seed = 78;
  EXPECT_NE(vary_arrangement(a, 2, p)[0].boxes, r1[0].boxes);
}

TEST(Variator, JitterStaysWithinBound) {
  // one box far from the edges: every component moves by at most 50 px
  const auto a = arrangement_of({{0.3, 0.3, 0.3, 0.3}});
  VariatorParams p;
  p.rng_seed = 4;
  p.top_k = 100;
  for (const auto& r : vary_arrangement(a, 1, p)) {
    const BBox& b = r.boxes[0];
    for (double d : {b.x - 0.3, b.y - 0.3, b.w - 0.3, b.h - 0.3}) {
      EXPECT_LE(std::abs(d), 50.0 / 512 + 1e-12);
      const double px = d * 512;
      EXPECT_NEAR(px, std::round(px), 1e-9);  // integer pixel offsets
    }
  }
}

TEST(Variator, RejectsBadParams) {
  const auto a = arrangement_of({{0.1, 0.1, 0.3, 0.3}});
  VariatorParams p;
  EXPECT_THROW(vary_arrangement(a, 0, p), Error);
  p.jitter_px = -1;
  EXPECT_THROW(vary_arrangement(a, 1, p), Error);
  p = {};
  p.top_k = 200;
  EXPECT_THROW(vary_arrangement(a, 1, p), Error);
  EXPECT_THROW(vary_arrangement(Arrangement{}, 1, VariatorParams{}), Error);
}

TEST(SelectArrangement, TopTenByScoreThenArea) {
  std::vector<ScoredSegment> segs;
  for (int i = 0; i < 14; ++i) {
    const double s = 0.05 + 0.01 * i;
    segs.push_back({{0, 0, s, s}, static_cast<double>(i % 7)});
  }
  const Arrangement a = select_arrangement(segs);
  ASSERT_EQ(a.boxes.size(), 10u);
  // score 6 twice (i = 6, 13): larger area (i = 13) first
  EXPECT_DOUBLE_EQ(a.boxes[0].w, 0.05 + 0.13);
  EXPECT_DOUBLE_EQ(a.boxes[1].w, 0.05 + 0.06);
  EXPECT_THROW(select_arrangement({}), Error);
}

TEST(SelectArrangement, ScoreFromAreaAndStability) {
  EXPECT_DOUBLE_EQ(segment_score(0.25, 0.9), 0.225);
  EXPECT_DOUBLE_EQ(segment_score(0.25, std::nullopt), 0.25);
}
