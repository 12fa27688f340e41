#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "piou/matching.hpp"
#include "piou/polygon.hpp"
#include "test_support.hpp"

namespace piou {
namespace {

TEST(RotateAnchors, SixTurnsPerAnchor) {
  const std::vector<Obb> base{Obb(0, 0, 4, 2, 0)};
  const auto out = rotate_anchors(base);
  ASSERT_EQ(out.size(), 6u);
  for (int n = 0; n < 6; ++n) {
    EXPECT_NEAR(out[n].theta(), n * kPi / 6, 1e-15);
    EXPECT_EQ(out[n].w(), 4.0);
    EXPECT_EQ(out[n].h(), 2.0);
    EXPECT_EQ(out[n].cx(), 0.0);
  }
}

TEST(RotateAnchors, EmptyAndAnchorMajorOrder) {
  EXPECT_TRUE(rotate_anchors({}).empty());
  const std::vector<Obb> base{Obb(0, 0, 4, 2, 0), Obb(10, 5, 8, 3, 0)};
  const auto out = rotate_anchors(base);
  ASSERT_EQ(out.size(), 12u);
  for (int n = 0; n < 6; ++n) EXPECT_EQ(out[n].cx(), 0.0);
  for (int n = 6; n < 12; ++n) {
    EXPECT_EQ(out[n].cx(), 10.0);
    EXPECT_NEAR(out[n].theta(), (n - 6) * kPi / 6, 1e-15);
  }
}

TEST(RotateAnchors, RejectsRotatedBase) {
  const std::vector<Obb> base{Obb(0, 0, 4, 2, 0.1)};
  EXPECT_THROW(rotate_anchors(base), std::invalid_argument);
}

TEST(Match, IdenticalAnchorMatches) {
  const std::vector<Obb> boxes{Obb(3, 4, 10, 5, 0.7)};
  const MatchSet m = match(boxes, boxes);
  ASSERT_EQ(m.count(), 1u);
  EXPECT_EQ(m.gt_index[0], 0u);
  EXPECT_EQ(m.pairs[0].pred, boxes[0]);
}

TEST(Match, OneThirdOverlapIsRejected) {
  const std::vector<Obb> anchors{Obb(0, 0, 2, 2, 0)};
  const std::vector<Obb> gts{Obb(1, 0, 2, 2, 0)};
  EXPECT_EQ(match(anchors, gts).count(), 0u);
}

TEST(Match, PicksTheBetterOfTwo) {
  // Shifting a 10x10 square by d gives IoU (10 - d) / (10 + d).
  const double d08 = 10.0 * 0.2 / 1.8;
  const double d06 = 10.0 * 0.4 / 1.6;
  const std::vector<Obb> anchors{Obb(0, 0, 10, 10, 0)};
  const std::vector<Obb> gts{Obb(-d06, 0, 10, 10, 0), Obb(0, d08, 10, 10, 0)};
  ASSERT_NEAR(exact_iou(anchors[0], gts[0]), 0.6, 1e-12);
  ASSERT_NEAR(exact_iou(anchors[0], gts[1]), 0.8, 1e-12);
  const MatchSet m = match(anchors, gts);
  ASSERT_EQ(m.count(), 1u);
  EXPECT_EQ(m.gt_index[0], 1u);
  EXPECT_EQ(m.pairs[0].gt, gts[1]);
}

TEST(Match, StrictThresholdAndTieBreak) {
  const double d05 = 10.0 / 3.0;  // IoU exactly 0.5 in exact arithmetic
  const std::vector<Obb> anchors{Obb(0, 0, 10, 10, 0)};
  const std::vector<Obb> at_half{Obb(d05, 0, 10, 10, 0)};
  const double iou = exact_iou(anchors[0], at_half[0]);
  MatchOptions opts;
  opts.threshold = iou;
  EXPECT_EQ(match(anchors, at_half, opts).count(), 0u);

  const std::vector<Obb> twins{Obb(1, 0, 10, 10, 0), Obb(-1, 0, 10, 10, 0)};
  const MatchSet m = match(anchors, twins);
  ASSERT_EQ(m.count(), 1u);
  EXPECT_EQ(m.gt_index[0], 0u);
}

TEST(Match, ThresholdMustBeOpenUnitInterval) {
  const std::vector<Obb> boxes{Obb(0, 0, 2, 2, 0)};
  for (double t : {0.0, 1.0, -0.5, 2.0}) {
    MatchOptions opts;
    opts.threshold = t;
    EXPECT_THROW(match(boxes, boxes, opts), std::invalid_argument);
  }
}

TEST(Match, SizeBoundAndThresholdMonotone) {
  auto g = testing::rng(51);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Obb> base, gts;
    for (int n = 0; n < 8; ++n) {
      base.emplace_back(testing::uniform(g, -30, 30), testing::uniform(g, -30, 30),
                        testing::uniform(g, 8, 40), testing::uniform(g, 4, 20), 0.0);
      gts.push_back(testing::random_box(g, 4, 40, 30));
    }
    const auto anchors = rotate_anchors(base);
    std::size_t prev = anchors.size() + 1;
    std::vector<std::size_t> prev_members;
    for (double t : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      MatchOptions opts;
      opts.threshold = t;
      const MatchSet m = match(anchors, gts, opts);
      ASSERT_LE(m.count(), anchors.size());
      ASSERT_LE(m.count(), prev);
      for (const auto& pair : m.pairs) ASSERT_GT(exact_iou(pair.pred, pair.gt), t);
      prev = m.count();
    }
  }
}

TEST(Match, PixelAndExactAgreeAwayFromThreshold) {
  auto g = testing::rng(52);
  int compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Obb gt = testing::random_box(g, 6, 40, 5);
    const Obb anchor(gt.cx() + testing::uniform(g, -4, 4), gt.cy() + testing::uniform(g, -4, 4),
                     gt.w() * testing::uniform(g, 0.7, 1.3), gt.h() * testing::uniform(g, 0.7, 1.3),
                     gt.theta() + testing::uniform(g, -0.4, 0.4));
    const double iou = exact_iou(anchor, gt);
    if (std::abs(iou - 0.5) < 0.02) continue;
    ++compared;
    const std::vector<Obb> anchors{anchor};
    const std::vector<Obb> gts{gt};
    MatchOptions pixel;
    pixel.method = IouMethod::pixel;
    ASSERT_EQ(match(anchors, gts).count(), match(anchors, gts, pixel).count()) << iou;
  }
  EXPECT_GT(compared, 150);
}

TEST(Match, IouByDispatches) {
  const Obb a(0.5, 0.5, 10, 10, 0);
  const Obb b(2.5, 0.5, 10, 10, 0);
  MatchOptions opts;
  EXPECT_NEAR(iou_by(IouMethod::exact, a, b, opts), 8.0 / 12.0, 1e-12);
  EXPECT_NEAR(iou_by(IouMethod::pixel, a, b, opts), 8.0 / 12.0, 0.02);
  EXPECT_NEAR(iou_by(IouMethod::piou, a, b, opts), 8.0 / 12.0, 0.05);
}

}  // namespace
}  // namespace piou
