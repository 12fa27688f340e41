#pragma once

// Independent reference implementations used as test oracles. None of these
// call into the library beyond the Obb accessors.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "piou/obb.hpp"

namespace piou::testing {

// Box-local coordinates of (x, y): rotate the offset from the centre back by
// theta in a y-up frame, then flip y back. Positive theta turns the box
// counter-clockwise on screen.
struct Local {
  double along;
  double across;
};

inline Local to_local(const Obb& b, double x, double y) {
  const double X = x - b.cx();
  const double Y = -(y - b.cy());
  const double c = std::cos(b.theta());
  const double s = std::sin(b.theta());
  return {X * c + Y * s, -X * s + Y * c};
}

inline bool oracle_contains(const Obb& b, double x, double y) {
  const Local l = to_local(b, x, y);
  return std::abs(l.along) <= b.w() / 2.0 && std::abs(l.across) <= b.h() / 2.0;
}

// Distance of (x, y) to the nearest edge line of the box, used to keep fuzzed
// points away from floating-point ties.
inline double boundary_gap(const Obb& b, double x, double y) {
  const Local l = to_local(b, x, y);
  return std::min(std::abs(std::abs(l.along) - b.w() / 2.0),
                  std::abs(std::abs(l.across) - b.h() / 2.0));
}

inline double oracle_kernel(double d, double s, double k) {
  // Same logistic as 1 - 1/(1+e^{-k(d-s)}) without the cancellation in the tail.
  return 1.0 / (1.0 + std::exp(k * (d - s)));
}

inline double oracle_soft(const Obb& b, double x, double y, double k, bool literal) {
  const Local l = to_local(b, x, y);
  const double sw = literal ? b.w() : b.w() / 2.0;
  const double sh = literal ? b.h() : b.h() / 2.0;
  return oracle_kernel(std::abs(l.along), sw, k) * oracle_kernel(std::abs(l.across), sh, k);
}

struct OracleSoft {
  double inter = 0.0;
  double uni = 0.0;
  double piou = 0.0;
};

// Plain double-loop sum of the kernel products over the integer lattice of
// [x0, x1] x [y0, y1].
inline OracleSoft oracle_soft_overlap(const Obb& p, const Obb& g, double k, bool hard,
                                      bool literal, int x0, int x1, int y0, int y1) {
  OracleSoft out;
  double fp_sum = 0.0;
  double fg_sum = 0.0;
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double fp = oracle_soft(p, x, y, k, literal);
      const double fg = oracle_soft(g, x, y, k, literal);
      out.inter += fp * fg;
      fp_sum += fp;
      fg_sum += fg;
    }
  }
  out.uni = hard ? p.area() + g.area() - out.inter : fp_sum + fg_sum - out.inter;
  out.piou = out.inter / out.uni;
  return out;
}

inline std::mt19937_64 rng(std::uint64_t seed) {
  std::seed_seq seq{seed, std::uint64_t{0x5eed}};
  return std::mt19937_64(seq);
}

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline Obb random_box(std::mt19937_64& g, double min_dim, double max_dim,
                      double centre_range = 20.0) {
  return Obb(uniform(g, -centre_range, centre_range), uniform(g, -centre_range, centre_range),
             uniform(g, min_dim, max_dim), uniform(g, min_dim, max_dim),
             uniform(g, 0.0, kPi));
}

// A fresh scratch directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("piou-test-" + tag + "-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace piou::testing
