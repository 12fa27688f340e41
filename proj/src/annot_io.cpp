#include "piou/annot_io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <limits>
#include <optional>
#include <cmath>
#include <random>
#include <sstream>

#include <json.hpp>

#include "piou/polygon.hpp"
#include "piou/report.hpp"

namespace piou {

namespace {

constexpr double kRectTolerance = 1e-6;

double cross(PixelPoint o, PixelPoint a, PixelPoint b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

}  // namespace

Aqbb::Aqbb(std::array<PixelPoint, 4> vertices) : vertices_(vertices) {
  for (const PixelPoint& p : vertices_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw std::invalid_argument("non-finite quadrilateral vertex");
    }
  }
  double extent = 0.0;
  for (const PixelPoint& p : vertices_) {
    extent = std::max({extent, std::abs(p.x - vertices_[0].x),
                       std::abs(p.y - vertices_[0].y)});
  }
  const double a = signed_area(vertices_);
  if (extent == 0.0 || std::abs(a) <= 1e-12 * extent * extent) {
    throw std::invalid_argument("degenerate quadrilateral");
  }
  if (a < 0.0) {
    std::reverse(vertices_.begin(), vertices_.end());
    reoriented_ = true;
  }
}

Obb canonical_obb(const Obb& box) {
  if (box.theta() < kPi / 2.0) return box;
  return Obb(box.cx(), box.cy(), box.h(), box.w(), box.theta() - kPi / 2.0);
}

namespace {

// Box whose u axis points along `dir` from edge endpoints; w along u.
Obb obb_from_axis(PixelPoint center, PixelPoint dir, double w, double h) {
  // u = (cos t, -sin t)
  const double theta = std::atan2(-dir.y, dir.x);
  return Obb(center.x, center.y, w, h, theta);
}

std::vector<PixelPoint> convex_hull(std::vector<PixelPoint> pts) {
  std::sort(pts.begin(), pts.end(), [](PixelPoint a, PixelPoint b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<PixelPoint> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace

Obb min_area_rect(std::span<const PixelPoint> points) {
  const std::vector<PixelPoint> hull =
      convex_hull(std::vector<PixelPoint>(points.begin(), points.end()));
  if (hull.size() < 3) throw std::invalid_argument("degenerate quadrilateral");

  double best_area = std::numeric_limits<double>::infinity();
  std::optional<Obb> best;
  for (std::size_t e = 0; e < hull.size(); ++e) {
    const PixelPoint a = hull[e];
    const PixelPoint b = hull[(e + 1) % hull.size()];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    if (len == 0.0) continue;
    const PixelPoint u{(b.x - a.x) / len, (b.y - a.y) / len};
    const PixelPoint v{-u.y, u.x};
    double u_lo = 0, u_hi = 0, v_lo = 0, v_hi = 0;
    for (const PixelPoint& p : hull) {
      const double pu = (p.x - a.x) * u.x + (p.y - a.y) * u.y;
      const double pv = (p.x - a.x) * v.x + (p.y - a.y) * v.y;
      u_lo = std::min(u_lo, pu);
      u_hi = std::max(u_hi, pu);
      v_lo = std::min(v_lo, pv);
      v_hi = std::max(v_hi, pv);
    }
    const double w = u_hi - u_lo;
    const double h = v_hi - v_lo;
    if (w * h < best_area && w > 0.0 && h > 0.0) {
      best_area = w * h;
      const double mu = (u_lo + u_hi) / 2.0;
      const double mv = (v_lo + v_hi) / 2.0;
      const PixelPoint c{a.x + mu * u.x + mv * v.x, a.y + mu * u.y + mv * v.y};
      best = obb_from_axis(c, u, w, h);
    }
  }
  if (!best) throw std::invalid_argument("degenerate quadrilateral");
  return canonical_obb(*best);
}

Obb aqbb_to_obb(const Aqbb& q) {
  const auto& v = q.vertices();
  PixelPoint e[4];
  double len[4];
  for (int i = 0; i < 4; ++i) {
    e[i] = {v[(i + 1) % 4].x - v[i].x, v[(i + 1) % 4].y - v[i].y};
    len[i] = std::hypot(e[i].x, e[i].y);
  }
  const double scale = std::max({len[0], len[1], len[2], len[3]});
  const bool rectangle =
      std::abs(len[0] - len[2]) <= kRectTolerance * scale &&
      std::abs(len[1] - len[3]) <= kRectTolerance * scale &&
      std::abs(e[0].x * e[1].x + e[0].y * e[1].y) <=
          kRectTolerance * len[0] * len[1] &&
      std::abs(e[1].x * e[2].x + e[1].y * e[2].y) <=
          kRectTolerance * len[1] * len[2];
  if (!rectangle) {
    return min_area_rect(std::span<const PixelPoint>(v.data(), v.size()));
  }
  const PixelPoint center{(v[0].x + v[1].x + v[2].x + v[3].x) / 4.0,
                          (v[0].y + v[1].y + v[2].y + v[3].y) / 4.0};
  const double w = (len[0] + len[2]) / 2.0;
  const double h = (len[1] + len[3]) / 2.0;
  return canonical_obb(obb_from_axis(center, {e[0].x / len[0], e[0].y / len[0]}, w, h));
}

ParseError::ParseError(std::size_t line, const std::string& what)
    : std::runtime_error("line " + std::to_string(line) + ": " + what),
      line_(line) {}

namespace {

using nlohmann::json;

void check_bounds(AnnotationRecord& rec) {
  if (!rec.image_size) return;
  const auto [iw, ih] = *rec.image_size;
  for (std::size_t b = 0; b < rec.boxes.size(); ++b) {
    for (const PixelPoint& p : rec.boxes[b].vertices()) {
      if (p.x < 0.0 || p.y < 0.0 || p.x > iw || p.y > ih) {
        rec.warnings.push_back("box " + std::to_string(b) +
                               " has a vertex outside the image");
        break;
      }
    }
  }
}

Aqbb make_box(const std::array<PixelPoint, 4>& pts, std::size_t line) {
  try {
    return Aqbb(pts);
  } catch (const std::invalid_argument& e) {
    throw ParseError(line, e.what());
  }
}

AnnotationRecord parse_json_line(const std::string& text, std::size_t line) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(line, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ParseError(line, "expected a JSON object");
  if (!j.contains("image") || !j["image"].is_string()) {
    throw ParseError(line, "missing string field \"image\"");
  }
  if (!j.contains("boxes") || !j["boxes"].is_array()) {
    throw ParseError(line, "missing array field \"boxes\"");
  }
  AnnotationRecord rec;
  rec.image_id = j["image"].get<std::string>();
  for (const json& box : j["boxes"]) {
    if (!box.is_array() || box.size() != 4) {
      throw ParseError(line, "each box needs exactly 4 vertices");
    }
    std::array<PixelPoint, 4> pts;
    for (std::size_t i = 0; i < 4; ++i) {
      const json& p = box[i];
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
        throw ParseError(line, "vertices must be [x, y] number pairs");
      }
      pts[i] = {p[0].get<double>(), p[1].get<double>()};
    }
    rec.boxes.push_back(make_box(pts, line));
    rec.orientation_corrected |= rec.boxes.back().was_reoriented();
  }
  if (j.contains("size")) {
    const json& s = j["size"];
    if (!s.is_array() || s.size() != 2 || !s[0].is_number() || !s[1].is_number()) {
      throw ParseError(line, "\"size\" must be [width, height]");
    }
    rec.image_size = std::array<double, 2>{s[0].get<double>(), s[1].get<double>()};
  }
  check_bounds(rec);
  return rec;
}

std::vector<std::string> split_csv_line(const std::string& text, std::size_t line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) throw ParseError(line, "unterminated quoted field");
  fields.push_back(std::move(cur));
  return fields;
}

double parse_number(const std::string& s, std::size_t line) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last || first == last) {
    throw ParseError(line, "not a number: \"" + s + "\"");
  }
  return v;
}

constexpr const char* kCsvHeader[] = {"image", "x1", "y1", "x2", "y2",
                                      "x3",    "y3", "x4", "y4"};

std::vector<AnnotationRecord> parse_csv(std::istream& in) {
  std::vector<AnnotationRecord> out;
  std::string text;
  std::size_t line = 0;
  bool header_seen = false;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    const auto fields = split_csv_line(text, line);
    if (!header_seen) {
      if (fields.size() != std::size(kCsvHeader) ||
          !std::equal(fields.begin(), fields.end(), std::begin(kCsvHeader))) {
        throw ParseError(line, "expected header image,x1,y1,x2,y2,x3,y3,x4,y4");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 9) {
      throw ParseError(line, "expected 9 fields, got " + std::to_string(fields.size()));
    }
    std::array<PixelPoint, 4> pts;
    for (std::size_t i = 0; i < 4; ++i) {
      pts[i] = {parse_number(fields[1 + 2 * i], line),
                parse_number(fields[2 + 2 * i], line)};
    }
    Aqbb box = make_box(pts, line);
    if (out.empty() || out.back().image_id != fields[0]) {
      out.push_back({fields[0], {}, std::nullopt, false, {}});
    }
    out.back().orientation_corrected |= box.was_reoriented();
    out.back().boxes.push_back(box);
  }
  return out;
}

}  // namespace

std::vector<AnnotationRecord> parse_annotations(std::istream& in,
                                                AnnotationFormat format) {
  if (format == AnnotationFormat::csv) return parse_csv(in);
  std::vector<AnnotationRecord> out;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back(parse_json_line(text, line));
  }
  return out;
}

void write_annotations(std::ostream& out,
                       std::span<const AnnotationRecord> records,
                       AnnotationFormat format) {
  if (format == AnnotationFormat::csv) {
    CsvWriter csv(out, {"image", "x1", "y1", "x2", "y2", "x3", "y3", "x4", "y4"});
    for (const AnnotationRecord& rec : records) {
      for (const Aqbb& box : rec.boxes) {
        std::vector<std::string> row{rec.image_id};
        for (const PixelPoint& p : box.vertices()) {
          row.push_back(format_double(p.x));
          row.push_back(format_double(p.y));
        }
        csv.row(row);
      }
    }
    return;
  }
  for (const AnnotationRecord& rec : records) {
    json j;
    j["image"] = rec.image_id;
    json boxes = json::array();
    for (const Aqbb& box : rec.boxes) {
      json pts = json::array();
      for (const PixelPoint& p : box.vertices()) pts.push_back({p.x, p.y});
      boxes.push_back(pts);
    }
    j["boxes"] = boxes;
    if (rec.image_size) j["size"] = {(*rec.image_size)[0], (*rec.image_size)[1]};
    out << j.dump() << '\n';
  }
}

void write_obb_csv(std::ostream& out, std::span<const AnnotationRecord> records) {
  CsvWriter csv(out, {"image", "box", "cx", "cy", "w", "h", "theta_deg"});
  for (const AnnotationRecord& rec : records) {
    for (std::size_t b = 0; b < rec.boxes.size(); ++b) {
      const Obb o = aqbb_to_obb(rec.boxes[b]);
      csv.row({rec.image_id, std::to_string(b), format_double(o.cx()),
               format_double(o.cy()), format_double(o.w()), format_double(o.h()),
               format_double(o.theta() * 180.0 / kPi)});
    }
  }
}

std::vector<AnnotationRecord> synth_dataset(std::size_t n, std::uint64_t seed,
                                            const SynthConfig& cfg) {
  if (!(cfg.median_ratio >= 1.0) || !(cfg.ratio_range[0] >= 1.0) ||
      !(cfg.ratio_range[0] <= cfg.median_ratio) ||
      !(cfg.median_ratio <= cfg.ratio_range[1])) {
    throw std::invalid_argument("synth_dataset: need 1 <= ratio_min <= median <= ratio_max");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(std::log(cfg.median_ratio),
                                          cfg.ratio_log_sigma);
  auto uniform = [&](const std::array<double, 2>& r) {
    return r[0] + (r[1] - r[0]) * unit(rng);
  };

  std::vector<AnnotationRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double ratio = 0.0;
    do {
      ratio = std::exp(normal(rng));
    } while (ratio < cfg.ratio_range[0] || ratio > cfg.ratio_range[1]);
    const double long_side = uniform(cfg.long_side_range);
    const double theta = uniform(cfg.angle_range);
    // Keep every vertex inside the image when the box fits at all.
    const double short_side = long_side / ratio;
    const double ex = 0.5 * (long_side * std::abs(std::cos(theta)) +
                             short_side * std::abs(std::sin(theta)));
    const double ey = 0.5 * (long_side * std::abs(std::sin(theta)) +
                             short_side * std::abs(std::cos(theta)));
    auto centre_range = [](double extent, double size) -> std::array<double, 2> {
      if (2.0 * extent >= size) return {size / 2.0, size / 2.0};
      return {extent, size - extent};
    };
    const double cx = uniform(centre_range(ex, cfg.image_size[0]));
    const double cy = uniform(centre_range(ey, cfg.image_size[1]));
    const Obb box(cx, cy, long_side, short_side, theta);

    char id[32];
    std::snprintf(id, sizeof(id), "synth-%06zu", i);
    AnnotationRecord rec;
    rec.image_id = id;
    rec.boxes.emplace_back(corners(box));
    rec.image_size = cfg.image_size;
    check_bounds(rec);
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace piou
