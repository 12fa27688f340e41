#pragma once

#include <filesystem>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace piou {

/// Shortest text that parses back to the same double.
std::string format_double(double v);

/// RFC 4180 field quoting: fields containing a comma, quote, CR or LF are
/// wrapped in quotes with embedded quotes doubled.
std::string csv_escape(std::string_view field);

/// Minimal CSV emitter with a mandatory header row and LF line endings.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::initializer_list<std::string_view> header);
  CsvWriter(std::ostream& out, const std::vector<std::string>& header);

  /// Throws std::invalid_argument when the field count differs from the header.
  void row(const std::vector<std::string>& fields);

 private:
  void write(const std::vector<std::string>& fields);

  std::ostream& out_;
  std::size_t columns_;
};

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Self-contained SVG 1.1 line chart.
struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;

  void write_svg(std::ostream& out, int width = 640, int height = 400) const;
};

/// Writes `content` to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path,
                       std::string_view content);

}  // namespace piou
