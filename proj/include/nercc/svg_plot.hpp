#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "nercc/csv.hpp"

namespace nercc {

struct PlotOptions {
  std::string x_column;
  std::string y_column;
  std::string group_column;  // empty: a single series
  /// Keep only rows whose `filter->first` column equals `filter->second`.
  std::optional<std::pair<std::string, std::string>> filter;
  /// Logarithmic x axis; non-positive x values sit one decade left of the
  /// smallest positive value and are labelled "0".
  bool log_x = false;
  std::string title;
};

/// Line chart with one polyline per group value (first-appearance order).
/// Repeated x values within a group are reduced to their median.
std::string render_svg(const CsvTable& table, const PlotOptions& options);

/// Reads `csv`, renders, and writes `output`. Nothing is written on error.
void render_plot(const std::filesystem::path& csv, const PlotOptions& options,
                 const std::filesystem::path& output);

}  // namespace nercc
