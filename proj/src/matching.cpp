#include "piou/matching.hpp"

#include <stdexcept>

#include "piou/pixel_oracle.hpp"
#include "piou/polygon.hpp"

namespace piou {

std::vector<Obb> rotate_anchors(std::span<const Obb> base) {
  std::vector<Obb> out;
  out.reserve(base.size() * 6);
  for (const Obb& a : base) {
    if (a.theta() != 0.0) {
      throw std::invalid_argument("rotate_anchors: base anchors must have theta 0");
    }
    for (int n = 0; n < 6; ++n) {
      out.emplace_back(a.cx(), a.cy(), a.w(), a.h(), n * kPi / 6.0);
    }
  }
  return out;
}

double iou_by(IouMethod method, const Obb& a, const Obb& b,
              const MatchOptions& opts) {
  switch (method) {
    case IouMethod::exact:
      return exact_iou(a, b);
    case IouMethod::pixel:
      return hard_overlap(a, b, opts.supersample).iou;
    case IouMethod::piou:
      return soft_overlap(a, b, opts.kernel, false).piou;
  }
  throw std::logic_error("iou_by: unknown method");
}

MatchSet match(std::span<const Obb> anchors, std::span<const Obb> gts,
               const MatchOptions& opts) {
  if (!(opts.threshold > 0.0 && opts.threshold < 1.0)) {
    throw std::invalid_argument("match: threshold must lie in (0, 1)");
  }
  MatchSet out;
  for (const Obb& anchor : anchors) {
    double best = -1.0;
    std::size_t best_gt = 0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const double iou = iou_by(opts.method, anchor, gts[g], opts);
      if (iou > best) {
        best = iou;
        best_gt = g;
      }
    }
    if (best > opts.threshold) {
      out.pairs.push_back({anchor, gts[best_gt]});
      out.gt_index.push_back(best_gt);
    }
  }
  return out;
}

}  // namespace piou
