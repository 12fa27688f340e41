#include "piou/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "piou/parallel.hpp"
#include "piou/polygon.hpp"
#include "piou/report.hpp"

namespace piou {

std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::piou: return "piou";
    case LossKind::hpiou: return "hpiou";
    case LossKind::l1: return "l1";
    case LossKind::l2: return "l2";
    case LossKind::smooth_l1: return "smooth_l1";
    case LossKind::giou_horizontal: return "giou_horizontal";
  }
  return "?";
}

LossKind parse_loss_kind(std::string_view name) {
  for (LossKind k : {LossKind::piou, LossKind::hpiou, LossKind::l1, LossKind::l2,
                     LossKind::smooth_l1, LossKind::giou_horizontal}) {
    if (name == to_string(k)) return k;
  }
  if (name == "giou") return LossKind::giou_horizontal;
  throw std::invalid_argument("unknown loss: " + std::string(name));
}

std::string_view to_string(Optimizer opt) {
  return opt == Optimizer::gd ? "gd" : "gd_momentum";
}

Optimizer parse_optimizer(std::string_view name) {
  if (name == "gd") return Optimizer::gd;
  if (name == "gd_momentum" || name == "momentum") return Optimizer::gd_momentum;
  throw std::invalid_argument("unknown optimizer: " + std::string(name));
}

std::string_view to_string(FitStatus status) {
  switch (status) {
    case FitStatus::converged: return "converged";
    case FitStatus::max_steps: return "max_steps";
    case FitStatus::diverged: return "diverged";
  }
  return "?";
}

double wrap_angle_residual(double delta) {
  return delta - kPi * std::ceil((delta - kPi / 2.0) / kPi);
}

BoxGradient residuals(const Obb& pred, const Obb& gt) {
  return {pred.cx() - gt.cx(), pred.cy() - gt.cy(), pred.w() - gt.w(),
          pred.h() - gt.h(), wrap_angle_residual(pred.theta() - gt.theta())};
}

namespace {

double smooth_term(double r) {
  const double a = std::abs(r);
  return a < 1.0 ? 0.5 * r * r : a - 0.5;
}

double smooth_slope(double r) {
  if (std::abs(r) < 1.0) return r;
  return r > 0.0 ? 1.0 : -1.0;
}

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Closed-form 1 - GIoU for horizontal boxes with its gradient with respect
// to (cx, cy, w, h). Edge derivatives follow the active min/max branch.
LossValue giou_with_grad(const Obb& pred, const Obb& gt) {
  if (pred.theta() != 0.0 || gt.theta() != 0.0) {
    throw std::invalid_argument("giou_loss: boxes must be horizontal");
  }
  struct Edges { double lo, hi; };
  auto span_of = [](double c, double e) { return Edges{c - e / 2.0, c + e / 2.0}; };
  const Edges px = span_of(pred.cx(), pred.w());
  const Edges py = span_of(pred.cy(), pred.h());
  const Edges gx = span_of(gt.cx(), gt.w());
  const Edges gy = span_of(gt.cy(), gt.h());

  // Per-axis overlap and hull lengths plus their derivatives with respect
  // to the predicted edges (d/dlo, d/dhi).
  struct Axis { double overlap, d_ov_lo, d_ov_hi, hull, d_hull_lo, d_hull_hi; };
  auto axis = [](Edges p, Edges g) {
    Axis a{};
    const double ov = std::min(p.hi, g.hi) - std::max(p.lo, g.lo);
    if (ov > 0.0) {
      a.overlap = ov;
      a.d_ov_hi = p.hi <= g.hi ? 1.0 : 0.0;
      a.d_ov_lo = p.lo >= g.lo ? -1.0 : 0.0;
    }
    a.hull = std::max(p.hi, g.hi) - std::min(p.lo, g.lo);
    a.d_hull_hi = p.hi >= g.hi ? 1.0 : 0.0;
    a.d_hull_lo = p.lo <= g.lo ? -1.0 : 0.0;
    return a;
  };
  const Axis ax = axis(px, gx);
  const Axis ay = axis(py, gy);

  const double inter = ax.overlap * ay.overlap;
  const double uni = pred.area() + gt.area() - inter;
  const double hull = ax.hull * ay.hull;

  LossValue out;
  out.value = 2.0 - inter / uni - uni / hull;

  // Derivatives with respect to (x_lo, x_hi, y_lo, y_hi).
  const double d_inter[4] = {ax.d_ov_lo * ay.overlap, ax.d_ov_hi * ay.overlap,
                             ay.d_ov_lo * ax.overlap, ay.d_ov_hi * ax.overlap};
  const double d_area[4] = {-pred.h(), pred.h(), -pred.w(), pred.w()};
  const double d_hull[4] = {ax.d_hull_lo * ay.hull, ax.d_hull_hi * ay.hull,
                            ay.d_hull_lo * ax.hull, ay.d_hull_hi * ax.hull};
  double d_edge[4];
  for (int e = 0; e < 4; ++e) {
    const double d_uni = d_area[e] - d_inter[e];
    d_edge[e] = -(d_inter[e] * uni - inter * d_uni) / (uni * uni) -
                (d_uni * hull - uni * d_hull[e]) / (hull * hull);
  }
  out.grad = {d_edge[0] + d_edge[1], d_edge[2] + d_edge[3],
              (d_edge[1] - d_edge[0]) / 2.0, (d_edge[3] - d_edge[2]) / 2.0, 0.0};
  return out;
}

}  // namespace

double smooth_l1(const Obb& pred, const Obb& gt, const BoxGradient& weights) {
  const BoxGradient r = residuals(pred, gt);
  double total = 0.0;
  for (std::size_t i = 0; i < 5; ++i) total += weights[i] * smooth_term(r[i]);
  return total;
}

double smooth_l1_inverse(double value) {
  if (value < 0.0) throw std::invalid_argument("smooth_l1_inverse: negative value");
  return value < 0.5 ? std::sqrt(2.0 * value) : value + 0.5;
}

double giou_loss(const Obb& pred, const Obb& gt) {
  return giou_with_grad(pred, gt).value;
}

LossValue evaluate_loss(const Obb& pred, const Obb& gt, const LossSpec& spec,
                        bool want_grad) {
  LossValue out;
  switch (spec.kind) {
    case LossKind::piou:
    case LossKind::hpiou: {
      KernelConfig cfg = spec.kernel;
      cfg.union_mode =
          spec.kind == LossKind::piou ? UnionMode::soft : UnionMode::hard;
      const SoftOverlap so = soft_overlap(pred, gt, cfg, want_grad);
      out.value = -so.log_piou;
      if (want_grad) {
        for (std::size_t i = 0; i < 5; ++i) out.grad[i] = -(*so.grad_log)[i];
      }
      break;
    }
    case LossKind::l1:
    case LossKind::l2:
    case LossKind::smooth_l1: {
      const BoxGradient r = residuals(pred, gt);
      for (std::size_t i = 0; i < 5; ++i) {
        const double w = spec.param_weights[i];
        if (spec.kind == LossKind::l1) {
          out.value += w * std::abs(r[i]);
          out.grad[i] = w * sgn(r[i]);
        } else if (spec.kind == LossKind::l2) {
          out.value += w * r[i] * r[i];
          out.grad[i] = 2.0 * w * r[i];
        } else {
          out.value += w * smooth_term(r[i]);
          out.grad[i] = w * smooth_slope(r[i]);
        }
      }
      break;
    }
    case LossKind::giou_horizontal:
      out = giou_with_grad(pred, gt);
      break;
  }
  for (std::size_t i = 0; i < 5; ++i) {
    if (!spec.mask[i] || !want_grad) out.grad[i] = 0.0;
  }
  return out;
}

std::optional<int> FitTrace::steps_to_iou(double level) const {
  for (const FitRecord& r : records) {
    if (r.exact_iou >= level) return r.step;
  }
  return std::nullopt;
}

namespace {

using Vec5 = std::array<double, 5>;

double dot(const Vec5& a, const Vec5& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// Optimisation coordinates: (cx, cy, ln w, ln h, theta), each scaled by the
// boundary displacement it causes on the initial box, so one unit moves the
// outline by about one pixel whatever the aspect ratio.
struct ZSpace {
  Vec5 scale;

  explicit ZSpace(const Obb& init)
      : scale{1.0, 1.0, init.w() / 2.0, init.h() / 2.0,
              std::max(init.w(), init.h()) / 2.0} {}

  Vec5 to_z(const Obb& b) const {
    const Vec5 raw{b.cx(), b.cy(), std::log(b.w()), std::log(b.h()), b.theta()};
    Vec5 z{};
    for (std::size_t i = 0; i < 5; ++i) z[i] = raw[i] * scale[i];
    return z;
  }

  std::optional<Obb> from_z(const Vec5& z) const {
    Vec5 raw{};
    for (std::size_t i = 0; i < 5; ++i) {
      raw[i] = z[i] / scale[i];
      if (!std::isfinite(raw[i])) return std::nullopt;
    }
    const double w = std::exp(raw[2]);
    const double h = std::exp(raw[3]);
    if (!std::isfinite(w) || !std::isfinite(h) || !(w > 0.0) || !(h > 0.0)) {
      return std::nullopt;
    }
    return Obb(raw[0], raw[1], w, h, raw[4]);
  }

  Vec5 gradient(const Obb& b, const BoxGradient& g) const {
    const Vec5 raw{g[0], g[1], g[2] * b.w(), g[3] * b.h(), g[4]};
    Vec5 out{};
    for (std::size_t i = 0; i < 5; ++i) out[i] = raw[i] / scale[i];
    return out;
  }
};

bool all_finite(const Vec5& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

FitTrace fit(const Obb& init, const Obb& target, const LossSpec& loss,
             const FitOptions& options) {
  if (!(options.lr > 0.0)) throw std::invalid_argument("fit: lr must be positive");
  if (options.max_steps < 1) throw std::invalid_argument("fit: max_steps must be >= 1");

  constexpr double kArmijo = 1e-4;
  constexpr int kMaxHalvings = 60;
  constexpr double kMomentum = 0.9;

  FitTrace trace;
  const ZSpace space(init);
  Obb cur = init;
  LossValue lv = evaluate_loss(cur, target, loss, true);
  Vec5 g = space.gradient(cur, lv.grad);
  double gnorm = std::sqrt(dot(g, g));
  trace.records.push_back({0, cur, lv.value, exact_iou(cur, target), gnorm});

  auto done = [&](const FitRecord& r) {
    return r.exact_iou >= options.stop_iou || r.grad_norm < options.grad_tol;
  };
  if (!std::isfinite(lv.value) || !all_finite(g)) {
    trace.status = FitStatus::diverged;
    return trace;
  }
  if (done(trace.last())) {
    trace.status = FitStatus::converged;
    return trace;
  }

  double alpha = options.lr / gnorm;
  Vec5 velocity{};
  for (int step = 1; step <= options.max_steps; ++step) {
    Vec5 dir{};
    if (options.optimizer == Optimizer::gd_momentum) {
      for (std::size_t i = 0; i < 5; ++i) velocity[i] = kMomentum * velocity[i] - g[i];
      if (dot(velocity, g) >= 0.0) {
        for (std::size_t i = 0; i < 5; ++i) velocity[i] = -g[i];
      }
      dir = velocity;
    } else {
      for (std::size_t i = 0; i < 5; ++i) dir[i] = -g[i];
    }
    const double slope = dot(g, dir);
    const Vec5 z = space.to_z(cur);

    bool accepted = false;
    for (int attempt = 0; attempt < kMaxHalvings && !accepted; ++attempt) {
      Vec5 zn{};
      for (std::size_t i = 0; i < 5; ++i) zn[i] = z[i] + alpha * dir[i];
      std::optional<Obb> cand;
      try {
        cand = space.from_z(zn);
      } catch (const std::invalid_argument&) {
        cand.reset();
      }
      if (cand) {
        try {
          const LossValue nv = evaluate_loss(*cand, target, loss, true);
          if (std::isfinite(nv.value) &&
              nv.value <= lv.value + kArmijo * alpha * slope) {
            cur = *cand;
            lv = nv;
            accepted = true;
            break;
          }
        } catch (const GridTooLarge&) {
          // Treated like an overshoot.
        }
      }
      alpha /= 2.0;
    }
    if (!accepted) {
      // No decreasing step at working precision: a stationary point.
      trace.status = FitStatus::converged;
      return trace;
    }
    alpha *= 2.0;

    g = space.gradient(cur, lv.grad);
    gnorm = std::sqrt(dot(g, g));
    trace.records.push_back({step, cur, lv.value, exact_iou(cur, target), gnorm});
    if (!all_finite(g)) {
      trace.status = FitStatus::diverged;
      return trace;
    }
    if (done(trace.last())) {
      trace.status = FitStatus::converged;
      return trace;
    }
  }
  trace.status = FitStatus::max_steps;
  return trace;
}

void write_trace_csv(std::ostream& out, const FitTrace& trace) {
  CsvWriter csv(out, {"step", "cx", "cy", "w", "h", "theta_deg", "loss",
                      "exact_iou", "grad_norm", "status"});
  for (const FitRecord& r : trace.records) {
    csv.row({std::to_string(r.step), format_double(r.params.cx()),
             format_double(r.params.cy()), format_double(r.params.w()),
             format_double(r.params.h()),
             format_double(r.params.theta() * 180.0 / kPi),
             format_double(r.loss), format_double(r.exact_iou),
             format_double(r.grad_norm), std::string(to_string(trace.status))});
  }
}

namespace {

struct Perturbation {
  const char* name;
  double shift;
  double scale;
  double rotation_deg;
};

constexpr Perturbation kPerturbations[] = {
    {"trans", 6.0, 1.0, 0.0},
    {"rot", 0.0, 1.0, 15.0},
    {"scale", 0.0, 1.2, 0.0},
    {"comb", 6.0, 1.2, 15.0},
};

constexpr int kRatios[] = {1, 5, 20};
constexpr double kTargetLength = 100.0;

std::vector<Scenario> build_suite(bool horizontal) {
  std::vector<Scenario> out;
  for (int ratio : kRatios) {
    for (const Perturbation& p : kPerturbations) {
      const double theta = horizontal ? 0.0 : kPi / 6.0;
      const double rot = horizontal ? 0.0 : p.rotation_deg * kPi / 180.0;
      const Obb target(0.0, 0.0, kTargetLength, kTargetLength / ratio, theta);
      const Obb init(p.shift, p.shift, target.w() * p.scale,
                     target.h() * p.scale, theta + rot);
      std::string id = std::string(horizontal ? "h-" : "") + "ratio" +
                       std::to_string(ratio) + "-" + p.name;
      out.push_back({std::move(id), target, init, horizontal});
    }
  }
  return out;
}

}  // namespace

std::vector<Scenario> standard_scenarios() { return build_suite(false); }

std::vector<Scenario> horizontal_scenarios() { return build_suite(true); }

Scenario find_scenario(std::string_view id) {
  for (bool horizontal : {false, true}) {
    for (Scenario& s : build_suite(horizontal)) {
      if (s.id == id) return s;
    }
  }
  throw std::invalid_argument("unknown scenario: " + std::string(id));
}

std::vector<ExperimentReport> run_suite(std::span<const Scenario> scenarios,
                                        std::span<const LossSpec> losses,
                                        const FitOptions& options,
                                        unsigned threads) {
  const std::size_t n = scenarios.size() * losses.size();
  std::vector<ExperimentReport> reports(n);
  for (const Scenario& s : scenarios) {
    for (const LossSpec& l : losses) {
      if (l.kind == LossKind::giou_horizontal && !s.horizontal) {
        throw std::invalid_argument("GIoU needs horizontal scenarios (got " +
                                    s.id + ")");
      }
    }
  }
  parallel_for(n, threads, [&](std::size_t idx) {
    const Scenario& sc = scenarios[idx / losses.size()];
    LossSpec spec = losses[idx % losses.size()];
    if (sc.horizontal) spec.mask[static_cast<std::size_t>(Param::theta)] = false;

    const auto start = std::chrono::steady_clock::now();
    const FitTrace trace = fit(sc.init, sc.target, spec, options);
    const std::chrono::duration<double> elapsed =
        std::chrono::steady_clock::now() - start;

    ExperimentReport& r = reports[idx];
    r.scenario_id = sc.id;
    r.loss = spec.kind;
    r.k = (spec.kind == LossKind::piou || spec.kind == LossKind::hpiou)
              ? spec.kernel.k
              : 0.0;
    r.seed = options.seed;
    r.status = trace.status;
    r.steps = trace.last().step;
    r.final_iou = trace.last().exact_iou;
    r.steps_to_090 = trace.steps_to_iou(0.9);
    r.wall_seconds = elapsed.count();
  });
  return reports;
}

std::vector<ExperimentReport> k_sweep(std::span<const Scenario> scenarios,
                                      std::span<const double> ks,
                                      const LossSpec& base,
                                      const FitOptions& options,
                                      unsigned threads) {
  if (ks.empty()) throw std::invalid_argument("k_sweep: no k values");
  std::vector<LossSpec> losses;
  for (double k : ks) {
    LossSpec spec = base;
    spec.kernel.k = k;
    losses.push_back(spec);
  }
  return run_suite(scenarios, losses, options, threads);
}

void write_reports_csv(std::ostream& out,
                       std::span<const ExperimentReport> reports) {
  CsvWriter csv(out, {"scenario", "loss", "k", "seed", "status", "steps",
                      "final_iou", "steps_to_0.9"});
  for (const ExperimentReport& r : reports) {
    csv.row({r.scenario_id, std::string(to_string(r.loss)), format_double(r.k),
             std::to_string(r.seed), std::string(to_string(r.status)),
             std::to_string(r.steps), format_double(r.final_iou),
             r.steps_to_090 ? std::to_string(*r.steps_to_090) : ""});
  }
}

void write_timing_csv(std::ostream& out,
                      std::span<const ExperimentReport> reports) {
  CsvWriter csv(out, {"scenario", "loss", "k", "wall_seconds"});
  for (const ExperimentReport& r : reports) {
    csv.row({r.scenario_id, std::string(to_string(r.loss)), format_double(r.k),
             format_double(r.wall_seconds)});
  }
}

std::vector<Fig1Triple> fig1_pairs() {
  constexpr double kMinGap = 0.05;
  constexpr double kEqualTol = 1e-9;
  std::vector<Fig1Triple> out;
  for (double w : {40.0, 60.0, 100.0}) {
    for (double h : {4.0, 6.0}) {
      for (double theta : {0.0, kPi / 6.0}) {
        const Obb gt(0.0, 0.0, w, h, theta);
        for (double deg : {3.0, 5.0, 10.0, 15.0, 20.0}) {
          const double dtheta = deg * kPi / 180.0;
          const Obb pred_a(0.0, 0.0, w, h, theta + dtheta);
          const double cost = smooth_l1(pred_a, gt);
          const double shift = smooth_l1_inverse(cost);
          const Obb candidates[] = {
              Obb(0.0, 0.0, w, h, theta - dtheta),  // mirror image: equal IoU
              Obb(shift, 0.0, w, h, theta),
              Obb(0.0, shift, w, h, theta),
              Obb(0.0, 0.0, w + shift, h, theta),
          };
          for (const Obb& pred_b : candidates) {
            Fig1Triple t{gt, pred_a, pred_b, cost, smooth_l1(pred_b, gt),
                         exact_iou(pred_a, gt), exact_iou(pred_b, gt)};
            if (std::abs(t.smooth_l1_a - t.smooth_l1_b) <= kEqualTol &&
                std::abs(t.iou_a - t.iou_b) >= kMinGap) {
              out.push_back(t);
            }
          }
        }
      }
    }
  }
  return out;
}

void write_fig1_csv(std::ostream& out, std::span<const Fig1Triple> triples,
                    const KernelConfig& cfg) {
  std::vector<std::string> header;
  for (const char* box : {"gt", "a", "b"}) {
    for (const char* f : {"cx", "cy", "w", "h", "theta_deg"}) {
      header.push_back(std::string(box) + "_" + f);
    }
  }
  for (const char* f : {"smooth_l1_a", "smooth_l1_b", "iou_a", "iou_b",
                        "piou_loss_a", "piou_loss_b"}) {
    header.emplace_back(f);
  }
  CsvWriter csv(out, header);
  for (const Fig1Triple& t : triples) {
    std::vector<std::string> row;
    for (const Obb* b : {&t.gt, &t.pred_a, &t.pred_b}) {
      row.push_back(format_double(b->cx()));
      row.push_back(format_double(b->cy()));
      row.push_back(format_double(b->w()));
      row.push_back(format_double(b->h()));
      row.push_back(format_double(b->theta() * 180.0 / kPi));
    }
    row.push_back(format_double(t.smooth_l1_a));
    row.push_back(format_double(t.smooth_l1_b));
    row.push_back(format_double(t.iou_a));
    row.push_back(format_double(t.iou_b));
    row.push_back(format_double(-soft_overlap(t.pred_a, t.gt, cfg, false).log_piou));
    row.push_back(format_double(-soft_overlap(t.pred_b, t.gt, cfg, false).log_piou));
    csv.row(row);
  }
}

}  // namespace piou
