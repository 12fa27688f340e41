#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "piou/obb.hpp"

namespace piou {

/// Arbitrary quadrilateral annotation: four vertices, clockwise on screen
/// (positive signed shoelace area in image coordinates).
class Aqbb {
 public:
  /// Throws std::invalid_argument("degenerate quadrilateral") for zero area.
  /// Counter-clockwise input is reversed; was_reoriented() reports it.
  explicit Aqbb(std::array<PixelPoint, 4> vertices);

  const std::array<PixelPoint, 4>& vertices() const { return vertices_; }
  bool was_reoriented() const { return reoriented_; }

 private:
  std::array<PixelPoint, 4> vertices_;
  bool reoriented_ = false;
};

/// Canonical form for conversions: theta in [0, pi/2), swapping w and h
/// (same rectangle) when needed.
Obb canonical_obb(const Obb& box);

/// Rectangles (opposite sides equal and adjacent sides perpendicular within
/// 1e-6 relative) convert exactly; anything else becomes the minimum-area
/// enclosing rectangle of its convex hull. Result is canonical.
Obb aqbb_to_obb(const Aqbb& q);

/// Minimum-area enclosing rectangle of a point set. One side of the optimum
/// lies on a convex-hull edge, so each edge direction is tried. Throws
/// std::invalid_argument for collinear input.
Obb min_area_rect(std::span<const PixelPoint> points);

struct AnnotationRecord {
  std::string image_id;
  std::vector<Aqbb> boxes;
  std::optional<std::array<double, 2>> image_size;
  /// Set when any box arrived counter-clockwise and was reversed.
  bool orientation_corrected = false;
  /// Soft problems such as vertices outside the image.
  std::vector<std::string> warnings;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

enum class AnnotationFormat { json_lines, csv };

/// JSON lines: {"image": str, "boxes": [[[x,y] x4], ...], "size": [w,h]?}
/// per line; blank lines are ignored. CSV: header
/// image,x1,y1,x2,y2,x3,y3,x4,y4 with one box per row; consecutive rows of
/// the same image form one record. Malformed input throws ParseError.
std::vector<AnnotationRecord> parse_annotations(std::istream& in,
                                                AnnotationFormat format);

void write_annotations(std::ostream& out,
                       std::span<const AnnotationRecord> records,
                       AnnotationFormat format);

/// One row per box: image,box,cx,cy,w,h,theta_deg.
void write_obb_csv(std::ostream& out, std::span<const AnnotationRecord> records);

struct SynthConfig {
  double median_ratio = 20.0;
  /// Aspect ratios (long/short) are drawn log-normally around the median
  /// and redrawn until they fall in this range.
  std::array<double, 2> ratio_range{2.0, 200.0};
  double ratio_log_sigma = 0.5;
  /// Orientation drawn uniformly from this range, radians.
  std::array<double, 2> angle_range{0.0, kPi};
  /// Long side drawn uniformly from this range, pixels.
  std::array<double, 2> long_side_range{40.0, 400.0};
  std::array<double, 2> image_size{1920.0, 1080.0};
};

/// Deterministic records with one box each, ids "synth-000000", ...
std::vector<AnnotationRecord> synth_dataset(std::size_t n, std::uint64_t seed,
                                            const SynthConfig& cfg = {});

}  // namespace piou
