#include "piou/piou.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace piou {

void KernelConfig::validate() const {
  if (!std::isfinite(k) || !(k > 0.0)) {
    throw std::invalid_argument("KernelConfig: k must be finite and positive");
  }
  if (grid_margin && (!std::isfinite(*grid_margin) || *grid_margin < 0.0)) {
    throw std::invalid_argument("KernelConfig: grid_margin must be >= 0");
  }
}

namespace {

// Shared pieces of K(d, s) for x = k(d - s): log K and 1 - K, from a single
// exp(-|x|).
struct KernelTerms {
  double log_k;
  double one_minus_k;
};

KernelTerms kernel_terms(double x) {
  const double e = std::exp(-std::abs(x));
  const double log_k = -(std::max(x, 0.0) + std::log1p(e));
  const double one_minus_k = x >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
  return {log_k, one_minus_k};
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// Signed offsets of a pixel along/across the box axes, with their partial
// derivatives with respect to (cx, cy, theta).
struct Offsets {
  double along;
  double across;
};

class RotatedGeometry {
 public:
  explicit RotatedGeometry(const Obb& box)
      : box_(box), ct_(std::cos(box.theta())), st_(std::sin(box.theta())) {}

  Offsets offsets(PixelPoint p) const {
    const RelativePosition rp = relative_position(box_, p);
    return {rp.along, rp.across};
  }
  double cos_theta() const { return ct_; }
  double sin_theta() const { return st_; }

 private:
  const Obb& box_;
  double ct_;
  double st_;
};

class AxisAlignedGeometry {
 public:
  explicit AxisAlignedGeometry(const Obb& box) : box_(box) {}

  Offsets offsets(PixelPoint p) const {
    return {box_.cx() - p.x, box_.cy() - p.y};
  }
  double cos_theta() const { return 1.0; }
  double sin_theta() const { return 0.0; }

 private:
  const Obb& box_;
};

// Neumaier-compensated running sum.
struct CompensatedSum {
  double sum = 0.0;
  double c = 0.0;

  void add(double v) {
    const double t = sum + v;
    if (std::abs(sum) >= std::abs(v)) {
      c += (sum - t) + v;
    } else {
      c += (v - t) + sum;
    }
    sum = t;
  }
  void scale(double f) {
    sum *= f;
    c *= f;
  }
  double value() const { return sum + c; }
};

// Streaming log-sum-exp with a weighted gradient accumulator:
// value = log sum exp(t_p), grad = sum softmax(t)_p * g_p.
class LogSumExp {
 public:
  void add(double t, const BoxGradient* g) {
    if (t > max_) {
      const double f = std::isfinite(max_) ? std::exp(max_ - t) : 0.0;
      sum_.scale(f);
      for (double& x : grad_) x *= f;
      max_ = t;
    }
    const double w = std::exp(t - max_);
    sum_.add(w);
    if (g != nullptr) {
      for (std::size_t i = 0; i < 5; ++i) grad_[i] += w * (*g)[i];
    }
  }

  double log_value() const { return max_ + std::log(sum_.value()); }

  BoxGradient normalized_grad() const {
    BoxGradient out = grad_;
    const double s = sum_.value();
    for (double& x : out) x /= s;
    return out;
  }

 private:
  double max_ = -std::numeric_limits<double>::infinity();
  CompensatedSum sum_;
  BoxGradient grad_{};
};

// Per-box kernel parameters fixed for one overlap evaluation.
struct BoxKernel {
  double s_w;
  double s_h;
  double ds_dw;  // d s_w / d w (same for h)
};

BoxKernel box_kernel(const Obb& box, HalfExtentMode mode) {
  return {kernel_threshold(box.w(), mode), kernel_threshold(box.h(), mode),
          mode == HalfExtentMode::corrected ? 0.5 : 1.0};
}

template <class Geometry>
SoftOverlap accumulate(const Obb& pred, const Obb& gt, const KernelConfig& cfg,
                       bool want_grad, std::int64_t pixel_budget) {
  cfg.validate();
  const PixelGrid grid = soft_grid(pred, gt, cfg);
  if (static_cast<double>(grid.i1 - grid.i0 + 1) *
          static_cast<double>(grid.j1 - grid.j0 + 1) >
      static_cast<double>(pixel_budget)) {
    throw GridTooLarge("grid too large: " +
                       std::to_string(grid.i1 - grid.i0 + 1) + " x " +
                       std::to_string(grid.j1 - grid.j0 + 1) +
                       " pixels exceeds budget " + std::to_string(pixel_budget));
  }

  const double k = cfg.k;
  const bool soft_union = cfg.union_mode == UnionMode::soft;
  const BoxKernel kp = box_kernel(pred, cfg.half_extent);
  const BoxKernel kg = box_kernel(gt, cfg.half_extent);
  const Geometry geo_pred(pred);
  const Geometry geo_gt(gt);
  const double ct = geo_pred.cos_theta();
  const double st = geo_pred.sin_theta();

  LogSumExp inter;
  CompensatedSum uni;
  std::array<CompensatedSum, 5> uni_grad{};
  BoxGradient dlog{};

  for (std::int64_t j = grid.j0; j <= grid.j1; ++j) {
    for (std::int64_t i = grid.i0; i <= grid.i1; ++i) {
      const PixelPoint p{static_cast<double>(i), static_cast<double>(j)};

      const Offsets op = geo_pred.offsets(p);
      const KernelTerms pw = kernel_terms(k * (std::abs(op.along) - kp.s_w));
      const KernelTerms ph = kernel_terms(k * (std::abs(op.across) - kp.s_h));
      const double log_fp = pw.log_k + ph.log_k;

      const Offsets og = geo_gt.offsets(p);
      const double log_fg =
          kernel_terms(k * (std::abs(og.along) - kg.s_w)).log_k +
          kernel_terms(k * (std::abs(og.across) - kg.s_h)).log_k;

      if (want_grad) {
        // d log F / d along and d log F / d across; |.| uses sign(0) = 0.
        const double g_along = -k * pw.one_minus_k * sign(op.along);
        const double g_across = -k * ph.one_minus_k * sign(op.across);
        // along = dx ct - dy st, across = dx st + dy ct, dx = cx - i.
        dlog[0] = g_along * ct + g_across * st;
        dlog[1] = -g_along * st + g_across * ct;
        dlog[2] = k * pw.one_minus_k * kp.ds_dw;
        dlog[3] = k * ph.one_minus_k * kp.ds_dw;
        dlog[4] = -g_along * op.across + g_across * op.along;
      }

      inter.add(log_fp + log_fg, want_grad ? &dlog : nullptr);

      if (soft_union) {
        const double fp = std::exp(log_fp);
        const double fg = std::exp(log_fg);
        uni.add(fp + fg - fp * fg);
        if (want_grad) {
          const double w = fp * (1.0 - fg);
          for (std::size_t n = 0; n < 5; ++n) uni_grad[n].add(w * dlog[n]);
        }
      }
    }
  }

  SoftOverlap out;
  out.log_s_inter = inter.log_value();
  out.s_inter = std::exp(out.log_s_inter);
  BoxGradient dlog_inter{};
  if (want_grad) dlog_inter = inter.normalized_grad();

  BoxGradient d_union{};
  if (soft_union) {
    out.s_union = uni.value();
    for (std::size_t n = 0; n < 5; ++n) d_union[n] = uni_grad[n].value();
  } else {
    out.s_union = pred.area() + gt.area() - out.s_inter;
    for (std::size_t n = 0; n < 5; ++n) d_union[n] = -out.s_inter * dlog_inter[n];
    d_union[2] += pred.h();
    d_union[3] += pred.w();
  }
  if (!(out.s_union > 0.0)) {
    throw std::domain_error("soft_overlap: union is not positive");
  }

  out.log_piou = out.log_s_inter - std::log(out.s_union);
  out.piou = std::exp(out.log_piou);
  if (want_grad) {
    BoxGradient gl{};
    BoxGradient g{};
    for (std::size_t n = 0; n < 5; ++n) {
      gl[n] = dlog_inter[n] - d_union[n] / out.s_union;
      g[n] = out.piou * gl[n];
    }
    out.grad_log = gl;
    out.grad = g;
  }
  return out;
}

}  // namespace

double kernel(double d, double s, double k) {
  const double x = k * (d - s);
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

double log_kernel(double d, double s, double k) {
  return kernel_terms(k * (d - s)).log_k;
}

double kernel_threshold(double extent, HalfExtentMode mode) {
  return mode == HalfExtentMode::corrected ? extent / 2.0 : extent;
}

double soft_containment(const Obb& box, PixelPoint p, const KernelConfig& cfg) {
  const RelativePosition rp = relative_position(box, p);
  return kernel(rp.d_w, kernel_threshold(box.w(), cfg.half_extent), cfg.k) *
         kernel(rp.d_h, kernel_threshold(box.h(), cfg.half_extent), cfg.k);
}

double grid_margin(const Obb& pred, const Obb& gt, const KernelConfig& cfg) {
  if (cfg.grid_margin) return *cfg.grid_margin;
  const double extent = std::max({pred.w(), pred.h(), gt.w(), gt.h()});
  return std::min(10.0, 3.0 / cfg.k * extent);
}

PixelGrid soft_grid(const Obb& pred, const Obb& gt, const KernelConfig& cfg) {
  const Hbb hbb = enclosing_hbb(pred, gt);
  const double m = grid_margin(pred, gt, cfg);
  return {static_cast<std::int64_t>(std::floor(hbb.x_min - m)),
          static_cast<std::int64_t>(std::ceil(hbb.x_max + m)),
          static_cast<std::int64_t>(std::floor(hbb.y_min - m)),
          static_cast<std::int64_t>(std::ceil(hbb.y_max + m))};
}

SoftOverlap soft_overlap(const Obb& pred, const Obb& gt,
                         const KernelConfig& cfg, bool want_grad,
                         std::int64_t pixel_budget) {
  return accumulate<RotatedGeometry>(pred, gt, cfg, want_grad, pixel_budget);
}

SoftOverlap soft_overlap_axis_aligned(const Obb& pred, const Obb& gt,
                                      const KernelConfig& cfg, bool want_grad,
                                      std::int64_t pixel_budget) {
  if (pred.theta() != 0.0 || gt.theta() != 0.0) {
    throw std::invalid_argument(
        "soft_overlap_axis_aligned: both boxes need theta == 0");
  }
  return accumulate<AxisAlignedGeometry>(pred, gt, cfg, want_grad,
                                         pixel_budget);
}

PiouLoss piou_loss(std::span<const MatchedPair> pairs, const KernelConfig& cfg,
                   bool want_grad, const ParamMask& mask) {
  PiouLoss out;
  out.pair_count = pairs.size();
  if (pairs.empty()) return out;

  const double inv_m = 1.0 / static_cast<double>(pairs.size());
  double total = 0.0;
  for (const MatchedPair& pair : pairs) {
    const SoftOverlap so = soft_overlap(pair.pred, pair.gt, cfg, want_grad);
    total -= so.log_piou;
    if (want_grad) {
      BoxGradient g{};
      for (std::size_t n = 0; n < 5; ++n) {
        g[n] = mask[n] ? -inv_m * (*so.grad_log)[n] : 0.0;
      }
      out.grads.push_back(g);
    }
  }
  out.loss = total * inv_m;
  return out;
}

}  // namespace piou
