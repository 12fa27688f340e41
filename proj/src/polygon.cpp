#include "piou/polygon.hpp"

#include <algorithm>
#include <cmath>

namespace piou {

namespace {

double cross(PixelPoint o, PixelPoint a, PixelPoint b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

double distance(PixelPoint a, PixelPoint b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

// Removes consecutive duplicates and vertices collinear with their
// neighbours (within kClipEpsilon of the chord).
std::vector<PixelPoint> simplify(std::vector<PixelPoint> pts) {
  bool changed = true;
  while (changed && pts.size() >= 3) {
    changed = false;
    for (std::size_t i = 0; i < pts.size() && pts.size() >= 3; ++i) {
      const std::size_t n = pts.size();
      const PixelPoint prev = pts[(i + n - 1) % n];
      const PixelPoint cur = pts[i];
      const PixelPoint next = pts[(i + 1) % n];
      const double chord = distance(prev, next);
      const bool duplicate = distance(prev, cur) <= kClipEpsilon;
      const bool collinear =
          chord > 0.0 && std::abs(cross(prev, cur, next)) / chord <= kClipEpsilon;
      if (duplicate || collinear || chord == 0.0) {
        pts.erase(pts.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  if (pts.size() < 3) pts.clear();
  return pts;
}

}  // namespace

double signed_area(std::span<const PixelPoint> v) {
  double acc = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const PixelPoint a = v[i];
    const PixelPoint b = v[(i + 1) % v.size()];
    acc += a.x * b.y - b.x * a.y;
  }
  return acc / 2.0;
}

ConvexPolygon::ConvexPolygon(std::vector<PixelPoint> vertices) {
  if (signed_area(vertices) < 0.0) std::reverse(vertices.begin(), vertices.end());
  vertices_ = simplify(std::move(vertices));
  if (!vertices_.empty() && signed_area(vertices_) <= 0.0) vertices_.clear();
}

ConvexPolygon ConvexPolygon::from_obb(const Obb& box) {
  const auto c = corners(box);
  return ConvexPolygon(std::vector<PixelPoint>(c.begin(), c.end()));
}

ConvexPolygon clip(const ConvexPolygon& subject,
                   const ConvexPolygon& clip_region) {
  if (subject.empty() || clip_region.empty()) return {};

  std::vector<PixelPoint> output(subject.vertices().begin(),
                                 subject.vertices().end());
  const auto edges = clip_region.vertices();
  for (std::size_t e = 0; e < edges.size() && !output.empty(); ++e) {
    const PixelPoint a = edges[e];
    const PixelPoint b = edges[(e + 1) % edges.size()];
    const double len = distance(a, b);
    // Signed distance to the edge line, positive on the interior side.
    auto side = [&](PixelPoint p) { return cross(a, b, p) / len; };

    std::vector<PixelPoint> input = std::move(output);
    output.clear();
    for (std::size_t i = 0; i < input.size(); ++i) {
      const PixelPoint cur = input[i];
      const PixelPoint prev = input[(i + input.size() - 1) % input.size()];
      const double sc = side(cur);
      const double sp = side(prev);
      const bool cur_in = sc >= -kClipEpsilon;
      const bool prev_in = sp >= -kClipEpsilon;
      if (cur_in != prev_in && std::abs(sc - sp) > 0.0) {
        const double t = sp / (sp - sc);
        if (t > 0.0 && t < 1.0) {
          output.push_back({prev.x + t * (cur.x - prev.x),
                            prev.y + t * (cur.y - prev.y)});
        }
      }
      if (cur_in) output.push_back(cur);
    }
  }
  return ConvexPolygon(std::move(output));
}

double area(const ConvexPolygon& poly) {
  if (poly.empty()) return 0.0;
  return std::max(0.0, signed_area(poly.vertices()));
}

double intersection_area(const Obb& a, const Obb& b) {
  return area(clip(ConvexPolygon::from_obb(a), ConvexPolygon::from_obb(b)));
}

double exact_iou(const Obb& a, const Obb& b) {
  const double inter = intersection_area(a, b);
  if (inter <= 0.0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace piou
