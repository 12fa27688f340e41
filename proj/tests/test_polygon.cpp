#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "piou/polygon.hpp"
#include "test_support.hpp"

namespace piou {
namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
const double kOctagon = 8 * kSqrt2 - 8;

ConvexPolygon square(double x0, double y0, double x1, double y1) {
  return ConvexPolygon({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
}

TEST(ConvexPolygon, EmptyAndOrientation) {
  EXPECT_TRUE(ConvexPolygon().empty());
  // Reversed input is accepted and yields the same area.
  const ConvexPolygon rev({{-1, 1}, {1, 1}, {1, -1}, {-1, -1}});
  EXPECT_DOUBLE_EQ(area(rev), 4.0);
  EXPECT_GE(signed_area(rev.vertices()), 0.0);
}

TEST(ConvexPolygon, DropsDuplicateAndCollinearVertices) {
  const ConvexPolygon p({{0, 0}, {1, 0}, {2, 0}, {2, 0}, {2, 2}, {0, 2}});
  EXPECT_EQ(p.size(), 4u);
  EXPECT_DOUBLE_EQ(area(p), 4.0);
}

TEST(Clip, SquareByItself) {
  const ConvexPolygon s = square(-1, -1, 1, 1);
  const ConvexPolygon c = clip(s, s);
  EXPECT_EQ(c.size(), 4u);
  EXPECT_DOUBLE_EQ(area(c), 4.0);
}

TEST(Clip, DisjointIsEmpty) {
  const ConvexPolygon c = clip(square(-1, -1, 1, 1), square(2, -1, 4, 1));
  EXPECT_TRUE(c.empty());
  EXPECT_EQ(area(c), 0.0);
}

TEST(Clip, SquareByItsDiagonalTurnIsOctagon) {
  const ConvexPolygon diamond = ConvexPolygon::from_obb(Obb(0, 0, 2, 2, kPi / 4));
  const ConvexPolygon c = clip(square(-1, -1, 1, 1), diamond);
  EXPECT_EQ(c.size(), 8u);
  EXPECT_NEAR(area(c), kOctagon, 1e-12);
}

TEST(Area, Examples) {
  EXPECT_DOUBLE_EQ(area(square(-1, -1, 1, 1)), 4.0);
  EXPECT_EQ(area(ConvexPolygon()), 0.0);
}

TEST(ExactIou, Examples) {
  const Obb a(0, 0, 2, 2, 0);
  EXPECT_DOUBLE_EQ(exact_iou(a, a), 1.0);
  EXPECT_NEAR(exact_iou(a, Obb(1, 0, 2, 2, 0)), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(exact_iou(a, Obb(0, 0, 2, 2, kPi / 4)), kOctagon / (8 - kOctagon), 1e-12);
  EXPECT_NEAR(kOctagon / (8 - kOctagon), 0.70711, 1e-5);
}

TEST(ExactIou, TouchingBoxesHaveZeroOverlap) {
  const Obb a(0, 0, 2, 2, 0);
  EXPECT_EQ(exact_iou(a, Obb(2, 0, 2, 2, 0)), 0.0);  // shared edge
  EXPECT_EQ(exact_iou(a, Obb(2, 2, 2, 2, 0)), 0.0);  // shared corner
  EXPECT_EQ(exact_iou(a, Obb(50, 0, 2, 2, 1.0)), 0.0);
}

TEST(ExactIou, SymmetricAndRigidInvariant) {
  auto g = testing::rng(21);
  for (int n = 0; n < 2000; ++n) {
    const Obb a = testing::random_box(g, 1, 40, 10);
    const Obb b = testing::random_box(g, 1, 40, 10);
    const double iou = exact_iou(a, b);
    ASSERT_GE(iou, 0.0);
    ASSERT_LE(iou, 1.0);
    ASSERT_NEAR(iou, exact_iou(b, a), 1e-12);

    const double tx = testing::uniform(g, -100, 100);
    const double ty = testing::uniform(g, -100, 100);
    const double phi = testing::uniform(g, 0, 2 * kPi);
    auto move = [&](const Obb& o) {
      const double x = o.cx() * std::cos(phi) + o.cy() * std::sin(phi);
      const double y = -o.cx() * std::sin(phi) + o.cy() * std::cos(phi);
      return Obb(x + tx, y + ty, o.w(), o.h(), o.theta() + phi);
    };
    ASSERT_NEAR(exact_iou(move(a), move(b)), iou, 1e-9);
  }
}

TEST(ExactIou, NestedBoxesGiveAreaRatio) {
  auto g = testing::rng(22);
  for (int n = 0; n < 500; ++n) {
    const Obb outer = testing::random_box(g, 20, 60, 10);
    // A small box near the centre, rotated arbitrarily, fits inside the
    // inscribed circle of the outer box.
    const double r = std::min(outer.w(), outer.h()) / 2.0;
    const double side = testing::uniform(g, 0.1, 0.6) * r;
    const Obb inner(outer.cx() + testing::uniform(g, -0.1, 0.1) * r,
                    outer.cy() + testing::uniform(g, -0.1, 0.1) * r, side, side * 0.7,
                    testing::uniform(g, 0, kPi));
    ASSERT_NEAR(exact_iou(inner, outer), inner.area() / outer.area(), 1e-12);
  }
}

TEST(ExactIou, RectangleClipHasAtMostEightVertices) {
  auto g = testing::rng(23);
  for (int n = 0; n < 2000; ++n) {
    const ConvexPolygon a = ConvexPolygon::from_obb(testing::random_box(g, 1, 40, 5));
    const ConvexPolygon b = ConvexPolygon::from_obb(testing::random_box(g, 1, 40, 5));
    const ConvexPolygon c = clip(a, b);
    ASSERT_TRUE(c.empty() || (c.size() >= 3 && c.size() <= 8)) << c.size();
  }
}

}  // namespace
}  // namespace piou
