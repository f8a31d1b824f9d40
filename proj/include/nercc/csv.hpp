#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nercc {

/// Shortest round-trippable rendering with 17 significant digits; NaN and
/// missing values become empty fields.
std::string format_number(double value);
std::string format_number(std::optional<double> value);

/// In-memory RFC-4180 table (header plus records, CRLF line endings).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position; throws UnknownColumn.
  std::size_t column(std::string_view name) const;
};

std::string to_csv(const CsvTable& table);
CsvTable parse_csv(std::string_view text);

CsvTable read_csv(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace nercc
