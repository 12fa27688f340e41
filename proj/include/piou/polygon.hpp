#pragma once

#include <span>
#include <vector>

#include "piou/obb.hpp"

namespace piou {

/// Convex polygon with positive signed shoelace area (counter-clockwise in
/// mathematical orientation, which is clockwise on a y-down screen). Either
/// empty or at least three vertices.
class ConvexPolygon {
 public:
  ConvexPolygon() = default;
  /// Takes vertices in either orientation; reverses to positive orientation,
  /// drops duplicate and collinear vertices. Fewer than three surviving
  /// vertices yields the empty polygon.
  explicit ConvexPolygon(std::vector<PixelPoint> vertices);

  static ConvexPolygon from_obb(const Obb& box);

  std::span<const PixelPoint> vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  bool empty() const { return vertices_.empty(); }

 private:
  std::vector<PixelPoint> vertices_;
};

/// On-line classification tolerance used by clip(), in pixels.
inline constexpr double kClipEpsilon = 1e-9;

/// Signed shoelace area (positive for the canonical orientation).
double signed_area(std::span<const PixelPoint> vertices);

/// Sutherland-Hodgman clip of `subject` against the convex `clip_region`.
ConvexPolygon clip(const ConvexPolygon& subject,
                   const ConvexPolygon& clip_region);

double area(const ConvexPolygon& poly);

/// Intersection area of two oriented boxes.
double intersection_area(const Obb& a, const Obb& b);

/// IoU from exact polygon clipping; 0 for disjoint or merely touching boxes.
double exact_iou(const Obb& a, const Obb& b);

}  // namespace piou
