#include "piou/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "piou/parallel.hpp"
#include "piou/polygon.hpp"
#include "piou/report.hpp"

namespace piou {

namespace {

Obb perturbed(const Obb& b, std::size_t param, double delta) {
  double p[5] = {b.cx(), b.cy(), b.w(), b.h(), b.theta()};
  p[param] += delta;
  return Obb(p[0], p[1], p[2], p[3], p[4]);
}

double step_for(std::size_t param, const FiniteDiffSteps& steps) {
  return param == static_cast<std::size_t>(Param::theta) ? steps.angle
                                                         : steps.position;
}

double norm(const BoxGradient& g) {
  double s = 0.0;
  for (double v : g) s += v * v;
  return std::sqrt(s);
}

}  // namespace

BoxGradient numeric_grad_log(const Obb& pred, const Obb& gt,
                             const KernelConfig& cfg,
                             const FiniteDiffSteps& steps) {
  BoxGradient out{};
  for (std::size_t i = 0; i < 5; ++i) {
    const double h = step_for(i, steps);
    const double up = soft_overlap(perturbed(pred, i, h), gt, cfg, false).log_piou;
    const double dn = soft_overlap(perturbed(pred, i, -h), gt, cfg, false).log_piou;
    out[i] = (up - dn) / (2.0 * h);
  }
  return out;
}

double relative_error(const BoxGradient& analytic, const BoxGradient& numeric) {
  BoxGradient diff{};
  for (std::size_t i = 0; i < 5; ++i) diff[i] = analytic[i] - numeric[i];
  const double scale = std::max(norm(analytic), norm(numeric));
  return scale > 0.0 ? norm(diff) / scale : 0.0;
}

bool near_kink(const Obb& pred, const Obb& gt, const KernelConfig& cfg,
               const FiniteDiffSteps& steps, double radius) {
  const PixelGrid grid = soft_grid(pred, gt, cfg);
  for (std::size_t i = 0; i < 5; ++i) {
    const double h = step_for(i, steps);
    if (!(soft_grid(perturbed(pred, i, h), gt, cfg) == grid) ||
        !(soft_grid(perturbed(pred, i, -h), gt, cfg) == grid)) {
      return true;
    }
  }
  for (std::int64_t j = grid.j0; j <= grid.j1; ++j) {
    const double y = static_cast<double>(j);
    if (std::abs(pred.cy() - y) < radius + steps.position) return true;
    for (std::int64_t i = grid.i0; i <= grid.i1; ++i) {
      const RelativePosition rp = relative_position(pred, {static_cast<double>(i), y});
      // A theta step moves a pixel's offsets by up to angle * d.
      const double r = radius + steps.position + steps.angle * rp.d;
      if (rp.d < r || rp.d_w < r || rp.d_h < r) return true;
    }
  }
  return false;
}

namespace {

GradCheckCase make_case(const GradCheckOptions& opt, std::size_t index) {
  std::seed_seq seq{opt.seed, static_cast<std::uint64_t>(index)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  const std::size_t period = static_cast<std::size_t>(
      std::max(1.0, std::round(1.0 / std::max(opt.disjoint_fraction, 1e-9))));
  const bool disjoint = opt.disjoint_fraction > 0.0 && index % period == 0;
  constexpr double ks[] = {5.0, 10.0, 15.0};

  for (;;) {
    KernelConfig cfg;
    cfg.k = ks[static_cast<std::size_t>(unit(rng) * 3.0) % 3];
    cfg.union_mode = unit(rng) < 0.5 ? UnionMode::soft : UnionMode::hard;
    if (cfg.union_mode == UnionMode::soft && unit(rng) < 0.2) {
      cfg.half_extent = HalfExtentMode::literal;
    }

    const Obb pred(uniform(-20, 20), uniform(-20, 20),
                   uniform(opt.min_dim, opt.max_dim),
                   uniform(opt.min_dim, opt.max_dim), uniform(0, kPi));
    const double gw = uniform(opt.min_dim, opt.max_dim);
    const double gh = uniform(opt.min_dim, opt.max_dim);
    double gx = 0.0, gy = 0.0;
    if (disjoint) {
      const double dir = uniform(0, 2 * kPi);
      const double reach = std::hypot(pred.w(), pred.h()) / 2.0 +
                           std::hypot(gw, gh) / 2.0 + uniform(2.0, 30.0);
      gx = pred.cx() + reach * std::cos(dir);
      gy = pred.cy() + reach * std::sin(dir);
    } else {
      const double spread = std::max({pred.w(), pred.h()}) / 2.0;
      gx = pred.cx() + uniform(-spread, spread);
      gy = pred.cy() + uniform(-spread, spread);
    }
    const Obb gt(gx, gy, gw, gh, uniform(0, kPi));

    if (!disjoint && exact_iou(pred, gt) <= 0.0) continue;
    if (near_kink(pred, gt, cfg, opt.steps)) continue;

    GradCheckCase c;
    c.index = index;
    c.pred = pred;
    c.gt = gt;
    c.cfg = cfg;
    c.disjoint = disjoint;
    const SoftOverlap so = soft_overlap(pred, gt, cfg, true);
    c.log_piou = so.log_piou;
    c.analytic = *so.grad_log;
    c.numeric = numeric_grad_log(pred, gt, cfg, opt.steps);
    c.rel_error = relative_error(c.analytic, c.numeric);
    return c;
  }
}

}  // namespace

std::vector<GradCheckCase> run_gradcheck(const GradCheckOptions& options) {
  std::vector<GradCheckCase> cases(options.count);
  parallel_for(options.count, options.threads,
               [&](std::size_t i) { cases[i] = make_case(options, i); });
  return cases;
}

double max_rel_error(std::span<const GradCheckCase> cases) {
  double worst = 0.0;
  for (const GradCheckCase& c : cases) worst = std::max(worst, c.rel_error);
  return worst;
}

void write_gradcheck_csv(std::ostream& out,
                         std::span<const GradCheckCase> cases) {
  std::vector<std::string> header = {"case", "disjoint", "k", "union", "mode",
                                     "log_piou"};
  for (const char* kind : {"analytic", "numeric"}) {
    for (const char* p : {"cx", "cy", "w", "h", "theta"}) {
      header.push_back(std::string(kind) + "_" + p);
    }
  }
  header.emplace_back("rel_error");
  CsvWriter csv(out, header);
  for (const GradCheckCase& c : cases) {
    std::vector<std::string> row = {
        std::to_string(c.index), c.disjoint ? "1" : "0", format_double(c.cfg.k),
        c.cfg.union_mode == UnionMode::soft ? "soft" : "hard",
        c.cfg.half_extent == HalfExtentMode::corrected ? "corrected" : "literal",
        format_double(c.log_piou)};
    for (double v : c.analytic) row.push_back(format_double(v));
    for (double v : c.numeric) row.push_back(format_double(v));
    row.push_back(format_double(c.rel_error));
    csv.row(row);
  }
}

}  // namespace piou
