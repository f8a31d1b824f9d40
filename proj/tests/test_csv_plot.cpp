#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "nercc/csv.hpp"
#include "nercc/error.hpp"
#include "nercc/svg_plot.hpp"

using namespace nercc;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvariantViolation;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "nercc_test_csv_plot";
  fs::create_directories(dir);
  return dir / name;
}

std::size_t count(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
  return n;
}

// Vertex list of the i-th polyline.
std::vector<std::string> vertices(const std::string& svg, std::size_t which = 0) {
  std::size_t pos = 0;
  for (std::size_t i = 0; i <= which; ++i) pos = svg.find("<polyline", i == 0 ? 0 : pos + 1);
  const auto begin = svg.find("points=\"", pos) + 8;
  const auto end = svg.find('"', begin);
  std::istringstream in(svg.substr(begin, end - begin));
  std::vector<std::string> out;
  for (std::string v; in >> v;) out.push_back(v);
  return out;
}

CsvTable table(std::vector<std::string> header, std::vector<std::vector<std::string>> rows) {
  return CsvTable{std::move(header), std::move(rows)};
}

}  // namespace

TEST_CASE("number formatting keeps 17 significant digits") {
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(format_number(2.0) == "2");
  CHECK(format_number(-1.5e-300) == "-1.5000000000000001e-300");
  CHECK(format_number(std::numeric_limits<double>::quiet_NaN()).empty());
  CHECK(format_number(std::optional<double>{}).empty());
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("csv writer quotes fields and uses CRLF") {
  const auto t = table({"a", "b"}, {{"1", "x,y"}, {"say \"hi\"", "line\nbreak"}});
  const auto text = to_csv(t);
  CHECK(text == "a,b\r\n1,\"x,y\"\r\n\"say \"\"hi\"\"\",\"line\nbreak\"\r\n");
  const auto back = parse_csv(text);
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
}

TEST_CASE("csv reader accepts LF files, empty fields and reports bad quoting") {
  const auto t = parse_csv("x,y,z\n1,,3\n4,5,\n");
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0] == std::vector<std::string>{"1", "", "3"});
  CHECK(t.rows[1] == std::vector<std::string>{"4", "5", ""});
  CHECK(t.column("z") == 2);
  CHECK(code_of([&] { t.column("w"); }) == ErrorCode::UnknownColumn);
  CHECK(code_of([] { parse_csv("a\n\"open"); }) == ErrorCode::ParseError);
  CHECK(code_of([] { read_csv(scratch("does_not_exist.csv")); }) == ErrorCode::IoError);
}

TEST_CASE("three-row single-group csv gives one polyline with three vertices") {
  const auto t = table({"x", "y"}, {{"1", "0.5"}, {"2", "0.25"}, {"3", "0.125"}});
  PlotOptions opts{"x", "y", "", std::nullopt, false, ""};
  const auto svg = render_svg(t, opts);
  CHECK(count(svg, "<polyline") == 1);
  CHECK(vertices(svg).size() == 3);
  CHECK(svg.find(">x</text>") != std::string::npos);
  CHECK(svg.find(">y</text>") != std::string::npos);
  CHECK(render_svg(t, opts) == svg);
}

TEST_CASE("two groups give two polylines and a two-entry legend") {
  const auto t = table({"n", "err", "scheme"},
                       {{"1", "3", "a"}, {"1", "2", "b"}, {"2", "1", "a"}, {"2", "1.5", "b"}});
  const auto svg = render_svg(t, PlotOptions{"n", "err", "scheme", std::nullopt, false, ""});
  CHECK(count(svg, "<polyline") == 2);
  CHECK(count(svg, "class=\"legend-entry\"") == 2);
  CHECK(svg.find(">a</text>") != std::string::npos);
  CHECK(svg.find(">b</text>") != std::string::npos);
}

TEST_CASE("repeated x values collapse to their median and vertices are sorted by x") {
  const auto t = table({"x", "y"}, {{"2", "10"}, {"1", "0"}, {"2", "0"}, {"2", "4"}, {"3", "0"}});
  const auto svg = render_svg(t, PlotOptions{"x", "y", "", std::nullopt, false, ""});
  const auto v = vertices(svg);
  REQUIRE(v.size() == 3);
  auto coord = [](const std::string& s, int i) {
    const auto comma = s.find(',');
    return std::stod(i == 0 ? s.substr(0, comma) : s.substr(comma + 1));
  };
  CHECK(coord(v[0], 0) < coord(v[1], 0));
  CHECK(coord(v[1], 0) < coord(v[2], 0));
  // Median 4 sits above the two zeros (smaller SVG y).
  CHECK(coord(v[1], 1) < coord(v[0], 1));
  CHECK(coord(v[0], 1) == coord(v[2], 1));
}

TEST_CASE("filter and log axis") {
  const auto t = table({"lambda", "mse", "kind"}, {{"0", "1", "summary"},
                                                    {"0.001", "0.5", "summary"},
                                                    {"0.1", "0.7", "summary"},
                                                    {"0.1", "9", "detail"}});
  PlotOptions opts{"lambda", "mse", "", std::pair<std::string, std::string>("kind", "summary"), true, ""};
  const auto svg = render_svg(t, opts);
  CHECK(vertices(svg).size() == 3);
  CHECK(svg.find(">0</text>") != std::string::npos);
  CHECK(svg.find(">1e-3</text>") != std::string::npos);
  opts.filter->second = "nothing";
  CHECK(code_of([&] { render_svg(t, opts); }) == ErrorCode::EmptyInput);
}

TEST_CASE("render_plot writes nothing on error") {
  const auto empty_csv = scratch("empty.csv");
  const auto header_only = scratch("header_only.csv");
  const auto out = scratch("never.svg");
  write_text_file(empty_csv, "");
  write_text_file(header_only, "x,y\r\n");
  fs::remove(out);
  PlotOptions opts{"x", "y", "", std::nullopt, false, ""};
  CHECK(code_of([&] { render_plot(empty_csv, opts, out); }) == ErrorCode::UnknownColumn);
  CHECK(code_of([&] { render_plot(header_only, opts, out); }) == ErrorCode::EmptyInput);
  opts.y_column = "z";
  CHECK(code_of([&] { render_plot(header_only, opts, out); }) == ErrorCode::UnknownColumn);
  CHECK_FALSE(fs::exists(out));

  write_text_file(header_only, "x,y\r\n1,2\r\n2,3\r\n");
  opts.y_column = "y";
  render_plot(header_only, opts, out);
  CHECK(fs::exists(out));
}
