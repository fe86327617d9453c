/**
 * @file io.hpp
 * @brief CSV table reading/writing and atomic file output.
 */
#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace voyopt {

/// In-memory CSV table: one header row plus string cells.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index for a header name, -1 if absent.
  int column(const std::string& name) const;
};

/// Parses comma-separated UTF-8 text with a header row ('.' decimal separator,
/// no quoting — the formats this toolkit reads and writes never need it).
/// Throws DataError on empty input.
CsvTable parse_csv(const std::string& text);

CsvTable read_csv_file(const std::filesystem::path& path);

std::string format_csv(const CsvTable& table);

/// Shortest round-trip decimal formatting for doubles in CSV/JSON-adjacent output.
std::string fmt_double(double v);

/// Writes via temp file + rename so partial output is never observed.
void atomic_write_file(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

}  // namespace voyopt
