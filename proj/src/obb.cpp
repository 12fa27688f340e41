#include "piou/obb.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace piou {

double normalize_angle(double theta) {
  double t = std::fmod(theta, kPi);
  if (t < 0.0) t += kPi;
  // fmod of a tiny negative value can round up to exactly pi.
  if (t >= kPi) t = 0.0;
  return t + 0.0;  // no negative zero

}

Obb::Obb(double cx, double cy, double w, double h, double theta)
    : cx_(cx), cy_(cy), w_(w), h_(h), theta_(0.0) {
  if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(w) ||
      !std::isfinite(h) || !std::isfinite(theta)) {
    throw std::invalid_argument("Obb: non-finite parameter");
  }
  if (!(w > 0.0) || !(h > 0.0)) {
    throw std::invalid_argument("Obb: w and h must be positive (got w=" +
                                std::to_string(w) + ", h=" +
                                std::to_string(h) + ")");
  }
  theta_ = normalize_angle(theta);
}

PixelPoint Obb::axis_u() const {
  return {std::cos(theta_), -std::sin(theta_)};
}

PixelPoint Obb::axis_v() const {
  return {std::sin(theta_), std::cos(theta_)};
}

RelativePosition relative_position(const Obb& box, PixelPoint p) {
  const double dx = box.cx() - p.x;
  const double dy = box.cy() - p.y;
  const double d = std::hypot(dx, dy);
  if (d == 0.0) return {0.0, 0.0, 0.0, box.theta(), 0.0, 0.0};

  // Direct projection keeps points on an edge exactly on it; the polar
  // cos/sin round trip does not.
  const double c = std::cos(box.theta());
  const double s = std::sin(box.theta());
  const double along = dx * c - dy * s;
  const double across = dx * s + dy * c;
  const double beta = box.theta() + std::atan2(dy + 0.0, dx);
  return {d, std::abs(along), std::abs(across), beta, along, across};
}

bool contains(const Obb& box, PixelPoint p) {
  const RelativePosition rp = relative_position(box, p);
  return rp.d_w <= box.w() / 2.0 && rp.d_h <= box.h() / 2.0;
}

std::array<PixelPoint, 4> corners(const Obb& box) {
  const PixelPoint u = box.axis_u();
  const PixelPoint v = box.axis_v();
  const double hw = box.w() / 2.0;
  const double hh = box.h() / 2.0;
  auto at = [&](double su, double sv) {
    return PixelPoint{box.cx() + su * hw * u.x + sv * hh * v.x,
                      box.cy() + su * hw * u.y + sv * hh * v.y};
  };
  return {at(-1, -1), at(1, -1), at(1, 1), at(-1, 1)};
}

Hbb enclosing_hbb(const Obb& a, const Obb& b) {
  Hbb out{a.cx(), a.cy(), a.cx(), a.cy()};
  for (const Obb* box : {&a, &b}) {
    for (const PixelPoint& c : corners(*box)) {
      out.x_min = std::min(out.x_min, c.x);
      out.y_min = std::min(out.y_min, c.y);
      out.x_max = std::max(out.x_max, c.x);
      out.y_max = std::max(out.y_max, c.y);
    }
  }
  return out;
}

}  // namespace piou
