#include "piou/pixel_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>

namespace piou {

namespace {

struct Run {
  std::int64_t first = 0;
  std::int64_t last = -1;  // inclusive; empty when last < first
  std::int64_t size() const { return last >= first ? last - first + 1 : 0; }
};

// Range of t = cx - x satisfying |t * a + c| <= half, or nullopt if empty.
// a == 0 degenerates to an all-or-nothing test on c.
std::optional<std::pair<double, double>> slab(double a, double c, double half) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (a == 0.0) {
    if (std::abs(c) <= half) return std::pair{-inf, inf};
    return std::nullopt;
  }
  double lo = (-half - c) / a;
  double hi = (half - c) / a;
  if (lo > hi) std::swap(lo, hi);
  return std::pair{lo, hi};
}

class RowScanner {
 public:
  RowScanner(const Obb& box, double x_start, double step, std::int64_t count)
      : box_(box), x_start_(x_start), step_(step), count_(count) {}

  Run run(double y) const {
    const double ct = std::cos(box_.theta());
    const double st = std::sin(box_.theta());
    const double dy = box_.cy() - y;
    // Along u: t*ct - dy*st ; along v: t*st + dy*ct, with t = cx - x.
    const auto su = slab(ct, -dy * st, box_.w() / 2.0);
    const auto sv = slab(st, dy * ct, box_.h() / 2.0);

    Run r;
    if (su && sv) {
      const double t_lo = std::max(su->first, sv->first);
      const double t_hi = std::min(su->second, sv->second);
      // x = cx - t, so the x range is [cx - t_hi, cx - t_lo].
      r.first = index_ceil(box_.cx() - t_hi);
      r.last = index_floor(box_.cx() - t_lo);
    } else {
      r.first = 0;
      r.last = -1;
    }
    return snap(r, y);
  }

 private:
  double x_of(std::int64_t n) const {
    return x_start_ + (static_cast<double>(n) + 0.5) * step_;
  }

  std::int64_t index_ceil(double x) const {
    const double v = std::ceil((x - x_start_) / step_ - 0.5);
    return static_cast<std::int64_t>(std::clamp(v, -1.0, double(count_)));
  }

  std::int64_t index_floor(double x) const {
    const double v = std::floor((x - x_start_) / step_ - 0.5);
    return static_cast<std::int64_t>(std::clamp(v, -1.0, double(count_)));
  }

  bool inside(std::int64_t n, double y) const {
    return n >= 0 && n < count_ && contains(box_, {x_of(n), y});
  }

  // Aligns the analytic run with contains() at both ends.
  Run snap(Run r, double y) const {
    r.first = std::clamp<std::int64_t>(r.first, 0, count_);
    r.last = std::clamp<std::int64_t>(r.last, -1, count_ - 1);
    if (r.first > r.last) {
      // Rounding may have emptied a run of one or two samples.
      const std::int64_t probe[] = {r.last, r.first};
      bool found = false;
      for (std::int64_t n : probe) {
        if (inside(n, y)) {
          r.first = r.last = n;
          found = true;
          break;
        }
      }
      if (!found) return {0, -1};
    }
    while (inside(r.first - 1, y)) --r.first;
    while (r.first <= r.last && !inside(r.first, y)) ++r.first;
    while (inside(r.last + 1, y)) ++r.last;
    while (r.last >= r.first && !inside(r.last, y)) --r.last;
    return r;
  }

  const Obb& box_;
  double x_start_;
  double step_;
  std::int64_t count_;
};

}  // namespace

HardOverlap hard_overlap(const Obb& a, const Obb& b, int supersample,
                         std::int64_t sample_budget) {
  if (supersample < 1) {
    throw std::invalid_argument("hard_overlap: supersample must be >= 1");
  }
  const Hbb hbb = enclosing_hbb(a, b);
  const auto i0 = static_cast<std::int64_t>(std::floor(hbb.x_min - 1.0));
  const auto i1 = static_cast<std::int64_t>(std::ceil(hbb.x_max + 1.0));
  const auto j0 = static_cast<std::int64_t>(std::floor(hbb.y_min - 1.0));
  const auto j1 = static_cast<std::int64_t>(std::ceil(hbb.y_max + 1.0));

  const std::int64_t s = supersample;
  const std::int64_t cols = (i1 - i0 + 1) * s;
  const std::int64_t rows = (j1 - j0 + 1) * s;
  if (static_cast<double>(cols) * static_cast<double>(rows) >
      static_cast<double>(sample_budget)) {
    throw GridTooLarge("grid too large: " + std::to_string(cols) + " x " +
                       std::to_string(rows) + " samples exceeds budget " +
                       std::to_string(sample_budget));
  }

  const double step = 1.0 / static_cast<double>(s);
  const double x_start = static_cast<double>(i0) - 0.5;
  const double y_start = static_cast<double>(j0) - 0.5;
  const RowScanner scan_a(a, x_start, step, cols);
  const RowScanner scan_b(b, x_start, step, cols);

  std::int64_t count_a = 0;
  std::int64_t count_b = 0;
  std::int64_t count_ab = 0;
  for (std::int64_t m = 0; m < rows; ++m) {
    const double y = y_start + (static_cast<double>(m) + 0.5) * step;
    const Run ra = scan_a.run(y);
    const Run rb = scan_b.run(y);
    count_a += ra.size();
    count_b += rb.size();
    const Run both{std::max(ra.first, rb.first), std::min(ra.last, rb.last)};
    count_ab += both.size();
  }

  const double weight = step * step;
  HardOverlap out;
  out.s_inter = static_cast<double>(count_ab) * weight;
  out.s_union = static_cast<double>(count_a + count_b - count_ab) * weight;
  const long long count_union = count_a + count_b - count_ab;
  out.iou = count_union > 0 ? static_cast<double>(count_ab) / static_cast<double>(count_union) : 0.0;
  return out;
}

}  // namespace piou
