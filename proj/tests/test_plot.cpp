#include "orbitcal/plot.hpp"
#include "orbitcal/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

using namespace orbitcal;

TEST_CASE("numbers round trip exactly") {
  Rng rng = make_rng(2, "numbers");
  std::uniform_real_distribution<double> exponent(-300.0, 300.0);
  std::uniform_real_distribution<double> mantissa(-1.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double v = mantissa(rng) * std::pow(10.0, exponent(rng));
    CHECK(parse_number(format_number(v)) == v);
  }
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(-2.0) == "-2");
  CHECK(std::isinf(parse_number("inf")));
  CHECK(parse_number("-inf") < 0);
  CHECK(std::isnan(parse_number(format_number(std::numeric_limits<double>::quiet_NaN()))));
  CHECK_THROWS(parse_number("1.5x"));
  CHECK_THROWS(parse_number(""));
}

TEST_CASE("csv quoting") {
  CHECK(csv_field("cmaes") == "cmaes");
  CHECK(csv_field("a,b") == "\"a,b\"");
  CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(split_csv_line("x,\"a,b\",\"q\"\"\",") == std::vector<std::string>{"x", "a,b", "q\"", ""});
}

TEST_CASE("line charts") {
  LineChart c;
  c.title = "t <1>";
  c.series = {{"cmaes", {1, 2, 3}, {0, -1, -2}}, {"de", {1, 2, 3}, {0, -0.5, -0.7}}};
  std::ostringstream os;
  write_line_svg(os, c);
  const std::string svg = os.str();
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(svg.find("version=\"1.1\"") != std::string::npos);
  std::size_t polylines = 0;
  for (auto p = svg.find("<polyline"); p != std::string::npos; p = svg.find("<polyline", p + 1)) {
    ++polylines;
  }
  CHECK(polylines == 2);
  CHECK(svg.find(">cmaes<") != std::string::npos);
  CHECK(svg.find(">de<") != std::string::npos);
  CHECK(svg.find("t &lt;1&gt;") != std::string::npos);

  std::ostringstream heat;
  write_heatmap_svg(heat, "h", "a", {1, 2}, "b", {3, 4, 5}, {1, 2, 3, 4, 5, 6});
  CHECK(heat.str().find("<rect") != std::string::npos);
  CHECK_THROWS(write_heatmap_svg(heat, "h", "a", {1, 2}, "b", {3}, {1}));
}
