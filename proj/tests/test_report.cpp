#include <gtest/gtest.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "piou/report.hpp"
#include "test_support.hpp"

namespace piou {
namespace {

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.5), "0.5");
  EXPECT_EQ(format_double(2.0), "2");
  EXPECT_EQ(format_double(-0.125), "-0.125");
  auto g = testing::rng(81);
  for (int n = 0; n < 1000; ++n) {
    const double v = testing::uniform(g, -1e6, 1e6) * std::pow(10.0, testing::uniform(g, -20, 20));
    const std::string s = format_double(v);
    double back = 0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    ASSERT_EQ(back, v);
  }
}

TEST(CsvEscape, QuotesOnlyWhenNeeded) {
  EXPECT_EQ(csv_escape("plain"), "plain");
  EXPECT_EQ(csv_escape("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_escape("two\nlines"), "\"two\nlines\"");
  EXPECT_EQ(csv_escape(""), "");
}

TEST(CsvWriter, HeaderAndFieldCount) {
  std::ostringstream os;
  CsvWriter csv(os, {"a", "b"});
  csv.row({"1", "x,y"});
  EXPECT_EQ(os.str(), "a,b\n1,\"x,y\"\n");
  EXPECT_THROW(csv.row({"only"}), std::invalid_argument);
}

TEST(LinePlot, WritesStandaloneSvg) {
  LinePlot plot{"t<1>", "step", "iou", {{"piou", {0, 1, 2}, {0.1, 0.5, 0.9}},
                                        {"smooth & l1", {0, 1, 2}, {0.1, 0.2, 0.3}}}};
  std::ostringstream os;
  plot.write_svg(os);
  const std::string s = os.str();
  EXPECT_NE(s.find("<svg"), std::string::npos);
  EXPECT_NE(s.find("version=\"1.1\""), std::string::npos);
  EXPECT_NE(s.find("t&lt;1&gt;"), std::string::npos);
  EXPECT_NE(s.find("smooth &amp; l1"), std::string::npos);
  EXPECT_EQ(s.find("t<1>"), std::string::npos);
  EXPECT_NE(s.find("</svg>"), std::string::npos);

  // Degenerate data (single point, flat line, no series) still renders.
  std::ostringstream empty;
  LinePlot{"e", "x", "y", {}}.write_svg(empty);
  EXPECT_NE(empty.str().find("</svg>"), std::string::npos);
  std::ostringstream flat;
  LinePlot{"f", "x", "y", {{"s", {3}, {7}}}}.write_svg(flat);
  EXPECT_EQ(flat.str().find("nan"), std::string::npos);
}

TEST(WriteFileAtomic, ReplacesContentAndCreatesParents) {
  testing::TempDir dir("report");
  const auto path = dir.path() / "out.csv";
  write_file_atomic(path, "first\n");
  write_file_atomic(path, "second\n");
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), "second\n");
  EXPECT_FALSE(std::filesystem::exists(path.string() + ".tmp"));
  write_file_atomic(dir.path() / "nested" / "x.csv", "x");
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "nested" / "x.csv"));
  // A regular file where a directory is needed cannot be written through.
  EXPECT_THROW(write_file_atomic(path / "x.csv", "x"), std::runtime_error);
}

}  // namespace
}  // namespace piou
