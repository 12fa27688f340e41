#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

#include "piou/obb.hpp"
#include "piou/piou.hpp"

namespace piou {

/// Central-difference steps per parameter.
struct FiniteDiffSteps {
  double position = 1e-4;  // cx, cy, w, h
  double angle = 1e-5;     // theta, radians
};

/// Central finite differences of ln piou with respect to the predicted box.
BoxGradient numeric_grad_log(const Obb& pred, const Obb& gt,
                             const KernelConfig& cfg,
                             const FiniteDiffSteps& steps = {});

/// ||a - n|| / max(||a||, ||n||), 0 when both vanish.
double relative_error(const BoxGradient& analytic, const BoxGradient& numeric);

/// True when a central-difference stencil around `pred` could cross a point
/// where ln piou is not smooth: a lattice pixel within `radius` of the
/// predicted box's centre, of either of its axis lines (where |.| in d_w,
/// d_h kinks), or of the beta branch line y = cy; or a change of the
/// pixel grid between stencil points.
bool near_kink(const Obb& pred, const Obb& gt, const KernelConfig& cfg,
               const FiniteDiffSteps& steps = {}, double radius = 1e-3);

struct GradCheckOptions {
  std::size_t count = 200;
  std::uint64_t seed = 1;
  double threshold = 1e-4;
  /// Fraction of cases built from boxes that do not touch.
  double disjoint_fraction = 0.15;
  double min_dim = 4.0;
  double max_dim = 60.0;
  FiniteDiffSteps steps;
  unsigned threads = 1;
};

struct GradCheckCase {
  std::size_t index = 0;
  Obb pred{0, 0, 1, 1, 0};
  Obb gt{0, 0, 1, 1, 0};
  KernelConfig cfg;
  bool disjoint = false;
  double log_piou = 0.0;
  BoxGradient analytic{};
  BoxGradient numeric{};
  double rel_error = 0.0;
};

/// Fuzzed configurations away from kinks, each compared against finite
/// differences. Case i depends only on (seed, i).
std::vector<GradCheckCase> run_gradcheck(const GradCheckOptions& options);

double max_rel_error(std::span<const GradCheckCase> cases);

void write_gradcheck_csv(std::ostream& out, std::span<const GradCheckCase> cases);

}  // namespace piou
