#include "orbitcal/plot.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace orbitcal {

namespace {

constexpr double kWidth = 800.0;
constexpr double kHeight = 500.0;
constexpr double kLeft = 80.0, kRight = 180.0, kTop = 40.0, kBottom = 60.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string escape_xml(std::string_view s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void settle() {
    if (!(lo <= hi)) lo = 0.0, hi = 1.0;
    if (lo == hi) lo -= 0.5, hi += 0.5;
  }
};

void write_frame(std::ostream& os, const std::string& title, const std::string& x_label,
                 const std::string& y_label, const Range& xr, const Range& yr) {
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">"
     << escape_xml(title) << "</text>\n";
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 15
     << "\" text-anchor=\"middle\" font-size=\"13\">" << escape_xml(x_label) << "</text>\n";
  os << "<text x=\"18\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" font-size=\"13\" "
     << "transform=\"rotate(-90 18 " << kTop + ph / 2 << ")\">" << escape_xml(y_label)
     << "</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double fx = k / 4.0;
    const double px = kLeft + fx * pw;
    const double py = kTop + ph - fx * ph;
    os << "<text x=\"" << px << "\" y=\"" << kTop + ph + 18
       << "\" text-anchor=\"middle\" font-size=\"11\">" << tick(xr.lo + fx * (xr.hi - xr.lo))
       << "</text>\n";
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << py + 4
       << "\" text-anchor=\"end\" font-size=\"11\">" << tick(yr.lo + fx * (yr.hi - yr.lo))
       << "</text>\n";
  }
}

void svg_open(std::ostream& os) {
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << kWidth
     << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parse_number(std::string_view s) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  }
  return v;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
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
  fields.push_back(std::move(cur));
  return fields;
}

void write_line_svg(std::ostream& os, const LineChart& chart) {
  Range xr, yr;
  for (const auto& s : chart.series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("series x/y length mismatch");
    for (const double v : s.x) xr.add(v);
    for (const double v : s.y) yr.add(v);
  }
  xr.settle();
  yr.settle();
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return kTop + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  svg_open(os);
  write_frame(os, chart.title, chart.x_label, chart.y_label, xr, yr);
  char buf[64];
  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const auto& s = chart.series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" "
       << "data-label=\"" << escape_xml(s.label) << "\" points=\"";
    bool first = true;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i]) || !std::isfinite(s.x[i])) continue;
      if (chart.step && !first && i > 0 && std::isfinite(s.y[i - 1])) {
        std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(s.x[i]), py(s.y[i - 1]));
        os << buf;
      }
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(s.x[i]), py(s.y[i]));
      os << buf;
      first = false;
    }
    os << "\"/>\n";
    const double ly = kTop + 14.0 + 20.0 * static_cast<double>(k);
    const double lx = kWidth - kRight + 12.0;
    os << "<line x1=\"" << lx << "\" y1=\"" << ly - 4 << "\" x2=\"" << lx + 24 << "\" y2=\""
       << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text class=\"legend\" x=\"" << lx + 30 << "\" y=\"" << ly
       << "\" font-size=\"12\">" << escape_xml(s.label) << "</text>\n";
  }
  os << "</svg>\n";
}

void write_heatmap_svg(std::ostream& os, const std::string& title, const std::string& x_label,
                       const std::vector<double>& xs, const std::string& y_label,
                       const std::vector<double>& ys, const std::vector<double>& values) {
  if (xs.empty() || ys.empty() || values.size() != xs.size() * ys.size()) {
    throw std::invalid_argument("heatmap: grid does not match values");
  }
  Range xr, yr, vr;
  for (const double v : xs) xr.add(v);
  for (const double v : ys) yr.add(v);
  for (const double v : values) vr.add(v);
  xr.settle();
  yr.settle();
  vr.settle();
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  const double cw = pw / static_cast<double>(xs.size());
  const double ch = ph / static_cast<double>(ys.size());

  svg_open(os);
  char buf[160];
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < ys.size(); ++j) {
      const double v = values[i * ys.size() + j];
      const double f = std::isfinite(v) ? (v - vr.lo) / (vr.hi - vr.lo) : 1.0;
      // Dark blue (low loss) to yellow (high loss).
      const int r = static_cast<int>(std::lround(30 + 225 * f));
      const int g = static_cast<int>(std::lround(30 + 200 * f));
      const int b = static_cast<int>(std::lround(120 - 100 * f));
      std::snprintf(buf, sizeof buf,
                    "<rect x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" height=\"%.2f\" "
                    "fill=\"rgb(%d,%d,%d)\"/>\n",
                    kLeft + cw * static_cast<double>(i),
                    kTop + ph - ch * static_cast<double>(j + 1), cw + 0.05, ch + 0.05, r, g, b);
      os << buf;
    }
  }
  write_frame(os, title, x_label, y_label, xr, yr);
  os << "<text x=\"" << kWidth - kRight + 12 << "\" y=\"" << kTop + 14
     << "\" font-size=\"12\">loss " << tick(vr.lo) << " (dark) to " << tick(vr.hi)
     << " (light)</text>\n";
  os << "</svg>\n";
}

}  // namespace orbitcal
