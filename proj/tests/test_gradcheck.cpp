#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "piou/gradcheck.hpp"
#include "piou/polygon.hpp"

namespace piou {
namespace {

TEST(RelativeError, VectorNorms) {
  EXPECT_EQ(relative_error({0, 0, 0, 0, 0}, {0, 0, 0, 0, 0}), 0.0);
  EXPECT_DOUBLE_EQ(relative_error({1, 0, 0, 0, 0}, {0, 0, 0, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(relative_error({3, 4, 0, 0, 0}, {3, 4, 0, 0, 0}), 0.0);
  EXPECT_DOUBLE_EQ(relative_error({3, 4, 0, 0, 0}, {3, 3, 0, 0, 0}), 1.0 / 5.0);
}

TEST(NearKink, DetectsCentreAndAxisPixels) {
  const KernelConfig cfg;
  const Obb gt(0.3, 0.4, 12, 6, 0.2);
  EXPECT_TRUE(near_kink(Obb(2, 3, 10, 5, 0.7), gt, cfg));        // centre on a pixel
  EXPECT_TRUE(near_kink(Obb(2.5, 3.0, 10, 5, 0.0), gt, cfg));    // row y = cy holds pixels
  EXPECT_FALSE(near_kink(Obb(2.37, 3.61, 10.3, 5.2, 0.71), gt, cfg));
}

TEST(NumericGrad, MatchesAnalyticAwayFromKinks) {
  KernelConfig cfg;
  const Obb pred(2.37, 3.61, 10.3, 5.2, 0.71);
  const Obb gt(0.3, 0.4, 12, 6, 0.2);
  const SoftOverlap so = soft_overlap(pred, gt, cfg, true);
  EXPECT_LT(relative_error(*so.grad_log, numeric_grad_log(pred, gt, cfg)), 1e-5);
}

TEST(RunGradcheck, PassesWithDisjointCases) {
  GradCheckOptions opt;
  opt.count = 40;
  opt.seed = 9;
  const auto cases = run_gradcheck(opt);
  ASSERT_EQ(cases.size(), 40u);
  EXPECT_LT(max_rel_error(cases), 1e-4);
  const auto disjoint = std::count_if(cases.begin(), cases.end(),
                                      [](const GradCheckCase& c) { return c.disjoint; });
  EXPECT_GE(disjoint, 5);
  for (const auto& c : cases) {
    ASSERT_FALSE(near_kink(c.pred, c.gt, c.cfg, opt.steps));
    double norm = 0.0;
    for (double v : c.analytic) norm += v * v;
    ASSERT_GT(norm, 0.0);
    if (c.disjoint) {
      ASSERT_EQ(intersection_area(c.pred, c.gt), 0.0);
    }
  }
}

TEST(RunGradcheck, DeterministicAndThreadIndependent) {
  GradCheckOptions opt;
  opt.count = 12;
  opt.seed = 4;
  std::ostringstream a, b;
  write_gradcheck_csv(a, run_gradcheck(opt));
  opt.threads = 3;
  write_gradcheck_csv(b, run_gradcheck(opt));
  EXPECT_EQ(a.str(), b.str());
}

TEST(RunGradcheck, ZeroCountWritesHeaderOnly) {
  GradCheckOptions opt;
  opt.count = 0;
  const auto cases = run_gradcheck(opt);
  EXPECT_TRUE(cases.empty());
  EXPECT_EQ(max_rel_error(cases), 0.0);
  std::ostringstream os;
  write_gradcheck_csv(os, cases);
  const std::string s = os.str();
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1);
  EXPECT_EQ(s.rfind("case,", 0), 0u);
}

}  // namespace
}  // namespace piou
