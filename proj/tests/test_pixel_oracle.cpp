#include <gtest/gtest.h>

#include <cmath>

#include "piou/pixel_oracle.hpp"
#include "piou/polygon.hpp"
#include "test_support.hpp"

namespace piou {
namespace {

// Visits every sample point of a generous window and tests both boxes with
// the rotation oracle.
HardOverlap brute_force(const Obb& a, const Obb& b, int s) {
  const double reach = std::hypot(a.w(), a.h()) / 2 + std::hypot(b.w(), b.h()) / 2;
  const int x0 = static_cast<int>(std::floor(std::min(a.cx(), b.cx()) - reach)) - 2;
  const int x1 = static_cast<int>(std::ceil(std::max(a.cx(), b.cx()) + reach)) + 2;
  const int y0 = static_cast<int>(std::floor(std::min(a.cy(), b.cy()) - reach)) - 2;
  const int y1 = static_cast<int>(std::ceil(std::max(a.cy(), b.cy()) + reach)) + 2;
  long long inter = 0;
  long long uni = 0;
  for (int j = y0; j <= y1; ++j) {
    for (int v = 0; v < s; ++v) {
      const double y = j - 0.5 + (v + 0.5) / s;
      for (int i = x0; i <= x1; ++i) {
        for (int u = 0; u < s; ++u) {
          const double x = i - 0.5 + (u + 0.5) / s;
          const bool in_a = testing::oracle_contains(a, x, y);
          const bool in_b = testing::oracle_contains(b, x, y);
          inter += in_a && in_b;
          uni += in_a || in_b;
        }
      }
    }
  }
  const double w = 1.0 / (double(s) * s);
  HardOverlap out{inter * w, uni * w, 0.0};
  out.iou = uni > 0 ? double(inter) / double(uni) : 0.0;
  return out;
}

TEST(HardOverlap, AlignedTenByTenCountsHundredPixels) {
  const Obb a(0.5, 0.5, 10, 10, 0);
  const HardOverlap h = hard_overlap(a, a, 1);
  EXPECT_EQ(h.s_inter, 100.0);
  EXPECT_EQ(h.s_union, 100.0);
  EXPECT_EQ(h.iou, 1.0);
}

TEST(HardOverlap, FarApartBoxes) {
  const HardOverlap h = hard_overlap(Obb(0, 0, 10, 4, 0.3), Obb(300, 200, 8, 8, 1.0), 2);
  EXPECT_EQ(h.s_inter, 0.0);
  EXPECT_EQ(h.iou, 0.0);
  EXPECT_GT(h.s_union, 0.0);
}

TEST(HardOverlap, DiagonalSquareConvergesToOctagonRatio) {
  const Obb a(0, 0, 2, 2, 0);
  const Obb b(0, 0, 2, 2, kPi / 4);
  const double exact = exact_iou(a, b);
  EXPECT_NEAR(hard_overlap(a, b, 64).iou, exact, 0.01);
  EXPECT_NEAR(exact, 0.70711, 1e-5);
}

TEST(HardOverlap, EmptyUnionGivesZero) {
  // A sliver between sample rows covers no sample point.
  const Obb thin(0.1, 0.5, 0.2, 0.2, 0);
  const HardOverlap h = hard_overlap(thin, thin, 1);
  EXPECT_EQ(h.s_union, 0.0);
  EXPECT_EQ(h.iou, 0.0);
}

TEST(HardOverlap, MatchesBruteForceOnFuzzedPairs) {
  auto g = testing::rng(31);
  for (int n = 0; n < 150; ++n) {
    const Obb a = testing::random_box(g, 1, 25, 6);
    const Obb b = testing::random_box(g, 1, 25, 6);
    const int s = 1 + n % 4;
    const HardOverlap want = brute_force(a, b, s);
    const HardOverlap got = hard_overlap(a, b, s);
    ASSERT_EQ(got.s_inter, want.s_inter) << n;
    ASSERT_EQ(got.s_union, want.s_union) << n;
    ASSERT_EQ(got.iou, want.iou) << n;
  }
}

TEST(HardOverlap, MatchesBruteForceOnLatticeAlignedBoxes) {
  // Edges land exactly on sample points, exercising the inclusive boundary.
  for (int w = 1; w <= 6; ++w) {
    for (int h = 1; h <= 6; ++h) {
      const Obb a(0, 0, 2 * w, 2 * h, 0);
      const Obb b(1, -1, 2 * h, 2 * w, 0);
      const HardOverlap want = brute_force(a, b, 1);
      const HardOverlap got = hard_overlap(a, b, 1);
      ASSERT_EQ(got.s_inter, want.s_inter);
      ASSERT_EQ(got.s_union, want.s_union);
      EXPECT_EQ(hard_overlap(a, a, 1).iou, 1.0);
    }
  }
}

TEST(HardOverlap, Symmetric) {
  auto g = testing::rng(32);
  for (int n = 0; n < 300; ++n) {
    const Obb a = testing::random_box(g, 2, 40, 10);
    const Obb b = testing::random_box(g, 2, 40, 10);
    const HardOverlap ab = hard_overlap(a, b, 3);
    const HardOverlap ba = hard_overlap(b, a, 3);
    ASSERT_EQ(ab.s_inter, ba.s_inter);
    ASSERT_EQ(ab.s_union, ba.s_union);
  }
}

TEST(HardOverlap, IdenticalBoxesGiveOneAtAnySupersample) {
  auto g = testing::rng(33);
  for (int n = 0; n < 100; ++n) {
    const Obb a = testing::random_box(g, 2, 40, 10);
    for (int s : {1, 2, 5, 16}) {
      const HardOverlap h = hard_overlap(a, a, s);
      ASSERT_EQ(h.s_inter, h.s_union);
      if (h.s_union > 0) {
        ASSERT_EQ(h.iou, 1.0);
      }
    }
  }
}

TEST(HardOverlap, RefinementReducesError) {
  auto g = testing::rng(34);
  int worse = 0;
  double err2_sum = 0.0;
  double err16_sum = 0.0;
  const int pairs = 300;
  for (int n = 0; n < pairs; ++n) {
    const Obb a = testing::random_box(g, 4, 40, 8);
    const Obb b = testing::random_box(g, 4, 40, 8);
    const double exact = exact_iou(a, b);
    const double e2 = std::abs(hard_overlap(a, b, 2).iou - exact);
    const double e16 = std::abs(hard_overlap(a, b, 16).iou - exact);
    err2_sum += e2;
    err16_sum += e16;
    worse += e16 > e2;
  }
  EXPECT_LT(err16_sum, err2_sum / 4);
  EXPECT_EQ(worse, 0);
}

TEST(HardOverlap, BudgetAndArgumentChecks) {
  const Obb big(0, 0, 5000, 5000, 0.3);
  EXPECT_THROW(hard_overlap(big, big, 16), GridTooLarge);
  EXPECT_THROW(hard_overlap(Obb(0, 0, 10, 10, 0), Obb(0, 0, 10, 10, 0), 1, 10), GridTooLarge);
  EXPECT_THROW(hard_overlap(Obb(0, 0, 2, 2, 0), Obb(0, 0, 2, 2, 0), 0), std::invalid_argument);
}

}  // namespace
}  // namespace piou
