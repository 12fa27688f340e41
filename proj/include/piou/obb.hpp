#pragma once

#include <array>
#include <numbers>

namespace piou {

inline constexpr double kPi = std::numbers::pi;

/// A point in image coordinates (x to the right, y downward). Grid pixels sit
/// on the integer lattice; real coordinates are allowed for supersampling.
struct PixelPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

/// Oriented bounding box (cx, cy, w, h, theta).
///
/// `w` is the extent along the box axis u = (cos theta, -sin theta) and `h`
/// the extent along v = (sin theta, cos theta). In image coordinates (y down)
/// a positive theta therefore turns the box counter-clockwise on screen. This
/// is the orientation under which the arccos-based pixel decomposition in
/// relative_position() measures distances along the box axes.
///
/// theta is normalized into [0, pi) on construction; w, h must be positive
/// and every field finite, otherwise std::invalid_argument is thrown.
class Obb {
 public:
  Obb(double cx, double cy, double w, double h, double theta);

  double cx() const { return cx_; }
  double cy() const { return cy_; }
  double w() const { return w_; }
  double h() const { return h_; }
  double theta() const { return theta_; }
  double area() const { return w_ * h_; }

  PixelPoint center() const { return {cx_, cy_}; }
  /// Unit vector along the w extent.
  PixelPoint axis_u() const;
  /// Unit vector along the h extent.
  PixelPoint axis_v() const;

  friend bool operator==(const Obb&, const Obb&) = default;

 private:
  double cx_;
  double cy_;
  double w_;
  double h_;
  double theta_;
};

/// Wraps an angle into [0, pi).
double normalize_angle(double theta);

/// Per-pixel triangle decomposition: distance to the center and its
/// components along the two box axes, plus the angle beta between them.
struct RelativePosition {
  double d = 0.0;
  double d_w = 0.0;
  double d_h = 0.0;
  double beta = 0.0;
  /// Signed d cos(beta) and d sin(beta); d_w and d_h are their magnitudes.
  double along = 0.0;
  double across = 0.0;
};

/// Axis-aligned box. Invariant: x_min <= x_max and y_min <= y_max.
struct Hbb {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;
};

/// beta = theta + arccos((cx - x) / d) when cy - y >= 0, theta - arccos(...)
/// otherwise; d_w = |d cos beta|, d_h = |d sin beta|. At the center (d = 0)
/// the result is d_w = d_h = 0 with beta = theta.
RelativePosition relative_position(const Obb& box, PixelPoint p);

/// Hard containment: true iff d_w <= w/2 and d_h <= h/2 (boundary inclusive).
bool contains(const Obb& box, PixelPoint p);

/// The four vertices, clockwise on screen (y down), starting from the corner
/// at -u/-v. The signed shoelace area of the result is positive.
std::array<PixelPoint, 4> corners(const Obb& box);

/// Tight axis-aligned bounds over the corners of both boxes.
Hbb enclosing_hbb(const Obb& a, const Obb& b);

}  // namespace piou
