#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "piou/obb.hpp"
#include "piou/pixel_oracle.hpp"

namespace piou {

/// Index into a 5-parameter box vector (cx, cy, w, h, theta).
enum class Param : std::size_t { cx = 0, cy = 1, w = 2, h = 3, theta = 4 };

using BoxGradient = std::array<double, 5>;
using ParamMask = std::array<bool, 5>;

inline constexpr ParamMask kAllParams{true, true, true, true, true};

inline double& at(BoxGradient& g, Param p) { return g[static_cast<std::size_t>(p)]; }
inline double at(const BoxGradient& g, Param p) { return g[static_cast<std::size_t>(p)]; }

/// Where the kernel places its midpoint. `corrected` uses the half extents
/// w/2 and h/2 so that the soft containment approximates the hard test;
/// `literal` uses the full extents w and h.
enum class HalfExtentMode { corrected, literal };

/// `soft` sums F + F' - FF' over the grid; `hard` uses w*h + w'*h' - S_inter.
enum class UnionMode { soft, hard };

struct KernelConfig {
  double k = 10.0;
  HalfExtentMode half_extent = HalfExtentMode::corrected;
  /// Extra pixels around the enclosing HBB. Unset picks
  /// min(10, 3/k * max(w, h, w', h')).
  std::optional<double> grid_margin;
  UnionMode union_mode = UnionMode::soft;

  /// Throws std::invalid_argument on a non-positive k or negative margin.
  void validate() const;
};

/// 1 - 1/(1 + exp(-k(d - s))), evaluated without overflow.
double kernel(double d, double s, double k);
/// log of kernel(); finite for any finite input.
double log_kernel(double d, double s, double k);

/// Kernel threshold for a full extent under the given mode.
double kernel_threshold(double extent, HalfExtentMode mode);

/// F(p | box) = K(d_w, s_w) K(d_h, s_h).
double soft_containment(const Obb& box, PixelPoint p, const KernelConfig& cfg);

/// Inclusive integer-lattice bounds of the pixel grid used by soft_overlap.
struct PixelGrid {
  std::int64_t i0 = 0;
  std::int64_t i1 = -1;
  std::int64_t j0 = 0;
  std::int64_t j1 = -1;

  std::int64_t pixel_count() const { return (i1 - i0 + 1) * (j1 - j0 + 1); }
  friend bool operator==(const PixelGrid&, const PixelGrid&) = default;
};

double grid_margin(const Obb& pred, const Obb& gt, const KernelConfig& cfg);
PixelGrid soft_grid(const Obb& pred, const Obb& gt, const KernelConfig& cfg);

/// Soft overlap of a predicted box against a fixed ground truth.
///
/// The intersection is accumulated in the log domain, so `log_s_inter` and
/// `log_piou` stay finite for boxes that are far apart even when `s_inter`
/// and `piou` underflow to zero in double precision.
struct SoftOverlap {
  double s_inter = 0.0;
  double log_s_inter = 0.0;
  double s_union = 0.0;
  double piou = 0.0;
  double log_piou = 0.0;
  /// d(piou)/d(pred params); present when requested.
  std::optional<BoxGradient> grad;
  /// d(ln piou)/d(pred params); present when requested.
  std::optional<BoxGradient> grad_log;
};

/// Throws GridTooLarge when the grid exceeds `pixel_budget`, and
/// std::domain_error if the union is not positive (possible only with
/// literal kernels and the hard union).
SoftOverlap soft_overlap(const Obb& pred, const Obb& gt,
                         const KernelConfig& cfg, bool want_grad,
                         std::int64_t pixel_budget = kDefaultSampleBudget);

/// Same sum through an axis-aligned geometry path (d_w = |cx - i|,
/// d_h = |cy - j|). Both boxes must have theta == 0.
SoftOverlap soft_overlap_axis_aligned(
    const Obb& pred, const Obb& gt, const KernelConfig& cfg, bool want_grad,
    std::int64_t pixel_budget = kDefaultSampleBudget);

struct MatchedPair {
  Obb pred;
  Obb gt;
};

struct PiouLoss {
  double loss = 0.0;
  std::size_t pair_count = 0;
  /// Per-pair d(loss)/d(pred params), masked; empty unless requested.
  std::vector<BoxGradient> grads;
};

/// -(1/|M|) sum ln piou over the pairs; 0 for an empty set. Gradients are
/// zeroed for parameters excluded by `mask`.
PiouLoss piou_loss(std::span<const MatchedPair> pairs, const KernelConfig& cfg,
                   bool want_grad, const ParamMask& mask = kAllParams);

}  // namespace piou
