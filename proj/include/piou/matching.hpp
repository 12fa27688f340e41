#pragma once

#include <span>
#include <vector>

#include "piou/obb.hpp"
#include "piou/piou.hpp"

namespace piou {

/// Positive (pred, gt) pairs. Every pair met the matching criterion when the
/// set was built.
struct MatchSet {
  std::vector<MatchedPair> pairs;
  /// Index of the gt each pair was matched to, parallel to `pairs`.
  std::vector<std::size_t> gt_index;

  std::size_t count() const { return pairs.size(); }
};

/// Six copies of each anchor at theta = n*pi/6, n = 0..5, anchor-major order.
/// Throws std::invalid_argument if a base anchor is not horizontal.
std::vector<Obb> rotate_anchors(std::span<const Obb> base);

enum class IouMethod { exact, pixel, piou };

struct MatchOptions {
  IouMethod method = IouMethod::exact;
  double threshold = 0.5;
  int supersample = 16;  // pixel method only
  KernelConfig kernel;   // piou method only
};

double iou_by(IouMethod method, const Obb& a, const Obb& b,
              const MatchOptions& opts);

/// Pairs each anchor with its best gt when that IoU is strictly greater than
/// the threshold. Ties go to the lowest gt index.
MatchSet match(std::span<const Obb> anchors, std::span<const Obb> gts,
               const MatchOptions& opts = {});

}  // namespace piou
