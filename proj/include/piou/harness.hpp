#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "piou/obb.hpp"
#include "piou/piou.hpp"

namespace piou {

enum class LossKind { piou, hpiou, l1, l2, smooth_l1, giou_horizontal };

std::string_view to_string(LossKind kind);
/// Accepts the to_string() names plus "giou" for giou_horizontal.
LossKind parse_loss_kind(std::string_view name);

struct LossSpec {
  LossKind kind = LossKind::piou;
  /// Used by piou/hpiou; the union mode is forced from `kind`.
  KernelConfig kernel;
  /// Per-parameter weights for the distance losses.
  BoxGradient param_weights{1.0, 1.0, 1.0, 1.0, 1.0};
  /// Parameters that receive gradient. Horizontal fits freeze theta.
  ParamMask mask = kAllParams;
};

struct LossValue {
  double value = 0.0;
  /// d(value)/d(cx, cy, w, h, theta), masked.
  BoxGradient grad{};
};

/// Angle difference wrapped into (-pi/2, pi/2].
double wrap_angle_residual(double delta);

/// Parameter residuals pred - gt with the angle wrapped.
BoxGradient residuals(const Obb& pred, const Obb& gt);

double smooth_l1(const Obb& pred, const Obb& gt,
                 const BoxGradient& weights = {1, 1, 1, 1, 1});

/// Residual magnitude whose SmoothL1 term equals `value` (inverse of the
/// per-parameter term).
double smooth_l1_inverse(double value);

/// 1 - GIoU for two horizontal boxes; throws std::invalid_argument unless
/// both have theta == 0.
double giou_loss(const Obb& pred, const Obb& gt);

/// Loss value and gradient with respect to the predicted box.
LossValue evaluate_loss(const Obb& pred, const Obb& gt, const LossSpec& spec,
                        bool want_grad = true);

enum class Optimizer { gd, gd_momentum };

std::string_view to_string(Optimizer opt);
Optimizer parse_optimizer(std::string_view name);

struct FitOptions {
  Optimizer optimizer = Optimizer::gd;
  /// Length of the first trial step in (cx, cy, ln w, ln h, theta) space.
  double lr = 1.0;
  int max_steps = 2000;
  std::uint64_t seed = 0;
  double stop_iou = 0.99;
  double grad_tol = 1e-8;
};

struct FitRecord {
  int step = 0;
  Obb params;
  double loss = 0.0;
  double exact_iou = 0.0;
  double grad_norm = 0.0;
};

enum class FitStatus { converged, max_steps, diverged };
std::string_view to_string(FitStatus status);

struct FitTrace {
  std::vector<FitRecord> records;
  FitStatus status = FitStatus::max_steps;

  const FitRecord& last() const { return records.back(); }
  /// First step whose exact IoU reaches `level`.
  std::optional<int> steps_to_iou(double level) const;
};

/// Gradient descent on (cx, cy, ln w, ln h, theta) with Armijo backtracking.
/// The trial step doubles after each accepted step and halves on rejection,
/// so the loss never increases between records. Stops at exact IoU >=
/// stop_iou, gradient norm < grad_tol, or when no decreasing step exists.
FitTrace fit(const Obb& init, const Obb& target, const LossSpec& loss,
             const FitOptions& options = {});

void write_trace_csv(std::ostream& out, const FitTrace& trace);

struct Scenario {
  std::string id;
  Obb target;
  Obb init;
  bool horizontal = false;
};

/// Aspect ratios {1, 5, 20} x perturbations {trans, rot, scale, comb}; ids
/// look like "ratio20-rot". Targets are 100 px long at theta = pi/6.
std::vector<Scenario> standard_scenarios();
/// The same suite with both boxes horizontal and no rotation error; ids get
/// an "h-" prefix.
std::vector<Scenario> horizontal_scenarios();
/// Looks up an id in both suites; throws std::invalid_argument if unknown.
Scenario find_scenario(std::string_view id);

struct ExperimentReport {
  std::string scenario_id;
  LossKind loss = LossKind::piou;
  double k = 0.0;
  std::uint64_t seed = 0;
  FitStatus status = FitStatus::max_steps;
  int steps = 0;
  double final_iou = 0.0;
  std::optional<int> steps_to_090;
  double wall_seconds = 0.0;
};

/// Fits every (scenario, loss) pair; report order is scenario-major, then
/// the order of `losses`, regardless of the thread count. Theta is frozen
/// for horizontal scenarios.
std::vector<ExperimentReport> run_suite(std::span<const Scenario> scenarios,
                                        std::span<const LossSpec> losses,
                                        const FitOptions& options,
                                        unsigned threads = 1);

/// run_suite over `base` with each k in `ks`. Throws std::invalid_argument
/// on an empty `ks`.
std::vector<ExperimentReport> k_sweep(std::span<const Scenario> scenarios,
                                      std::span<const double> ks,
                                      const LossSpec& base,
                                      const FitOptions& options,
                                      unsigned threads = 1);

/// Deterministic columns only; wall-clock goes through write_timing_csv.
void write_reports_csv(std::ostream& out,
                       std::span<const ExperimentReport> reports);
void write_timing_csv(std::ostream& out,
                      std::span<const ExperimentReport> reports);

struct Fig1Triple {
  Obb gt;
  Obb pred_a;
  Obb pred_b;
  double smooth_l1_a = 0.0;
  double smooth_l1_b = 0.0;
  double iou_a = 0.0;
  double iou_b = 0.0;
};

/// Triples where pred_a carries a pure angle error and pred_b a single
/// translation or size error of identical SmoothL1 cost, kept only when the
/// exact IoUs differ by at least 0.05.
std::vector<Fig1Triple> fig1_pairs();

void write_fig1_csv(std::ostream& out, std::span<const Fig1Triple> triples,
                    const KernelConfig& cfg);

}  // namespace piou
