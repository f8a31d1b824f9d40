#include "nercc/svg_plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <string_view>
#include <vector>

#include "nercc/error.hpp"

namespace nercc {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

constexpr std::array<std::string_view, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                      "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::optional<double> parse_cell(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string fmt(double v, const char* spec = "%.2f") {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::vector<double> nice_ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (step >= raw) break;
  }
  std::vector<double> ticks;
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) {
    ticks.push_back(std::abs(t) < 1e-12 * span ? 0.0 : t);
  }
  return ticks;
}

struct Series {
  std::string name;
  std::map<double, std::vector<double>> samples;
};

}  // namespace

std::string render_svg(const CsvTable& table, const PlotOptions& options) {
  const std::size_t xi = table.column(options.x_column);
  const std::size_t yi = table.column(options.y_column);
  const std::optional<std::size_t> gi =
      options.group_column.empty() ? std::nullopt
                                   : std::optional<std::size_t>(table.column(options.group_column));
  const std::optional<std::size_t> fi =
      options.filter ? std::optional<std::size_t>(table.column(options.filter->first)) : std::nullopt;
  if (table.rows.empty()) throw Error(ErrorCode::EmptyInput, "CSV has no data rows");

  std::vector<Series> series;
  for (const auto& row : table.rows) {
    auto cell = [&](std::size_t i) -> const std::string& {
      static const std::string empty;
      return i < row.size() ? row[i] : empty;
    };
    if (fi && cell(*fi) != options.filter->second) continue;
    const auto x = parse_cell(cell(xi));
    const auto y = parse_cell(cell(yi));
    if (!x || !y) continue;
    const std::string name = gi ? cell(*gi) : options.y_column;
    auto it = std::find_if(series.begin(), series.end(), [&](const Series& s) { return s.name == name; });
    if (it == series.end()) {
      series.push_back(Series{name, {}});
      it = series.end() - 1;
    }
    it->samples[*x].push_back(*y);
  }
  if (series.empty()) throw Error(ErrorCode::EmptyInput, "no plottable rows");

  // x positions in plot space.
  double min_pos = INFINITY;
  for (const auto& s : series) {
    for (const auto& [x, ys] : s.samples) {
      if (x > 0.0) min_pos = std::min(min_pos, x);
    }
  }
  const double zero_pos = std::isfinite(min_pos) ? std::log10(min_pos) - 1.0 : 0.0;
  auto map_x = [&](double x) {
    if (!options.log_x) return x;
    return x > 0.0 ? std::log10(x) : zero_pos;
  };

  double x_lo = INFINITY, x_hi = -INFINITY, y_lo = INFINITY, y_hi = -INFINITY;
  std::vector<std::vector<std::pair<double, double>>> points;
  for (const auto& s : series) {
    auto& pts = points.emplace_back();
    for (const auto& [x, ys] : s.samples) {
      const double px = map_x(x);
      const double py = median(ys);
      pts.emplace_back(px, py);
      x_lo = std::min(x_lo, px);
      x_hi = std::max(x_hi, px);
      y_lo = std::min(y_lo, py);
      y_hi = std::max(y_hi, py);
    }
  }
  auto widen = [](double& lo, double& hi) {
    if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi))) {
      const double pad = std::max(0.5, std::abs(hi) * 0.1);
      lo -= pad;
      hi += pad;
    } else {
      const double pad = 0.05 * (hi - lo);
      lo -= pad;
      hi += pad;
    }
  };
  widen(x_lo, x_hi);
  widen(y_lo, y_hi);

  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * plot_w; };
  auto sy = [&](double y) { return kTop + (y_hi - y) / (y_hi - y_lo) * plot_h; };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth, "%.0f") +
         "\" height=\"" + fmt(kHeight, "%.0f") + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!options.title.empty()) {
    svg += "<text x=\"" + fmt(kLeft + plot_w / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" +
           escape(options.title) + "</text>\n";
  }
  svg += "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\n";
  svg += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kTop + plot_h) + "\" x2=\"" +
         fmt(kLeft + plot_w) + "\" y2=\"" + fmt(kTop + plot_h) + "\"/>\n";
  svg += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(kTop) + "\" x2=\"" + fmt(kLeft) + "\" y2=\"" +
         fmt(kTop + plot_h) + "\"/>\n";
  svg += "</g>\n";

  svg += "<g class=\"ticks\">\n";
  if (options.log_x) {
    for (double t = std::ceil(x_lo); t <= x_hi; t += 1.0) {
      const bool is_zero = std::isfinite(min_pos) && t == zero_pos;
      const std::string label = is_zero ? "0" : "1e" + fmt(t, "%.0f");
      svg += "<text x=\"" + fmt(sx(t)) + "\" y=\"" + fmt(kTop + plot_h + 16) +
             "\" text-anchor=\"middle\">" + label + "</text>\n";
    }
  } else {
    for (double t : nice_ticks(x_lo, x_hi)) {
      svg += "<text x=\"" + fmt(sx(t)) + "\" y=\"" + fmt(kTop + plot_h + 16) +
             "\" text-anchor=\"middle\">" + fmt(t, "%.4g") + "</text>\n";
    }
  }
  for (double t : nice_ticks(y_lo, y_hi)) {
    svg += "<text x=\"" + fmt(kLeft - 6) + "\" y=\"" + fmt(sy(t) + 4) + "\" text-anchor=\"end\">" +
           fmt(t, "%.4g") + "</text>\n";
  }
  svg += "</g>\n";

  svg += "<text class=\"x-label\" x=\"" + fmt(kLeft + plot_w / 2) + "\" y=\"" + fmt(kHeight - 16) +
         "\" text-anchor=\"middle\">" + escape(options.x_column) + "</text>\n";
  svg += "<text class=\"y-label\" x=\"20\" y=\"" + fmt(kTop + plot_h / 2) +
         "\" text-anchor=\"middle\" transform=\"rotate(-90 20 " + fmt(kTop + plot_h / 2) + ")\">" +
         escape(options.y_column) + "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto color = kPalette[s % kPalette.size()];
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < points[s].size(); ++i) {
      if (i > 0) svg += ' ';
      svg += fmt(sx(points[s][i].first)) + "," + fmt(sy(points[s][i].second));
    }
    svg += "\"/>\n";
  }

  svg += "<g class=\"legend\">\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const double y = kTop + 10 + 20.0 * static_cast<double>(s);
    const double x = kLeft + plot_w + 20;
    svg += "<g class=\"legend-entry\"><line x1=\"" + fmt(x) + "\" y1=\"" + fmt(y) + "\" x2=\"" +
           fmt(x + 24) + "\" y2=\"" + fmt(y) + "\" stroke=\"" +
           std::string(kPalette[s % kPalette.size()]) + "\" stroke-width=\"2\"/><text x=\"" +
           fmt(x + 30) + "\" y=\"" + fmt(y + 4) + "\">" + escape(series[s].name) + "</text></g>\n";
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

void render_plot(const std::filesystem::path& csv, const PlotOptions& options,
                 const std::filesystem::path& output) {
  const auto svg = render_svg(read_csv(csv), options);
  write_text_file(output, svg);
}

}  // namespace nercc
