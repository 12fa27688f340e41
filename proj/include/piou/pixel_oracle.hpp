#pragma once

#include <cstdint>
#include <stdexcept>

#include "piou/obb.hpp"

namespace piou {

/// Thrown when a pixel sum would visit more sample points than allowed.
class GridTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::int64_t kDefaultSampleBudget = 100'000'000;

/// Hard pixel statistics: sample counts weighted by 1/s^2.
struct HardOverlap {
  double s_inter = 0.0;
  double s_union = 0.0;
  double iou = 0.0;
};

/// Counts samples inside both boxes and inside either box over the enclosing
/// HBB grown by one pixel. Pixel (i, j) sits on the integer lattice and owns
/// the unit cell centred on it; with supersample s the cell is split into
/// s x s sub-cells sampled at their centres. s = 1 is the integer lattice.
///
/// Each sample row is resolved by solving for the contiguous run of samples
/// inside each box and then snapping the run ends with contains(), so the
/// counts equal a sample-by-sample evaluation of contains() at O(1) per row.
HardOverlap hard_overlap(const Obb& a, const Obb& b, int supersample,
                         std::int64_t sample_budget = kDefaultSampleBudget);

}  // namespace piou
