#pragma once

// Static SVG 1.1 charts and the small CSV helpers shared by the exporters.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace orbitcal {

/// Shortest text that parses back to exactly the same double.
std::string format_number(double v);
/// Strict parse of a whole field; throws std::invalid_argument.
double parse_number(std::string_view s);

/// RFC 4180 quoting: fields with comma, quote or newline are quoted.
std::string csv_field(std::string_view s);
/// Splits one CSV record (quoted fields allowed, no embedded newlines).
std::vector<std::string> split_csv_line(std::string_view line);

struct Series {
  std::string label;
  std::vector<double> x, y;
};

struct LineChart {
  std::string title, x_label, y_label;
  std::vector<Series> series;
  bool step = false;  ///< draw as a staircase (piecewise-constant signals)
};

/// One <polyline> per series plus a legend entry carrying its label.
void write_line_svg(std::ostream& os, const LineChart& chart);

/// Row-major grid values[i * ys.size() + j] drawn as colored cells.
void write_heatmap_svg(std::ostream& os, const std::string& title, const std::string& x_label,
                       const std::vector<double>& xs, const std::string& y_label,
                       const std::vector<double>& ys, const std::vector<double>& values);

}  // namespace orbitcal
