#include "voyopt/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include "voyopt/core.hpp"

namespace voyopt {

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

CsvTable parse_csv(const std::string& text) {
  if (text.empty()) throw DataError("empty CSV input");
  CsvTable t;
  std::size_t pos = 0;
  bool first = true;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string line = text.substr(pos, eol == std::string::npos ? std::string::npos : eol - pos);
    pos = eol == std::string::npos ? text.size() : eol + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t cpos = 0;
    while (true) {
      std::size_t comma = line.find(',', cpos);
      cells.push_back(line.substr(cpos, comma == std::string::npos ? std::string::npos : comma - cpos));
      if (comma == std::string::npos) break;
      cpos = comma + 1;
    }
    if (first) {
      t.header = std::move(cells);
      first = false;
    } else {
      t.rows.push_back(std::move(cells));
    }
  }
  if (t.header.empty()) throw DataError("CSV input has no header row");
  return t;
}

CsvTable read_csv_file(const std::filesystem::path& path) {
  try {
    return parse_csv(read_file(path));
  } catch (const DataError& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string format_csv(const CsvTable& table) {
  std::ostringstream out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out << ',';
    out << table.header[i];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << row[i];
    }
    out << '\n';
  }
  return out.str();
}

std::string fmt_double(double v) {
  char buf[32];
  // nan/inf never satisfy the round-trip comparison (nan != nan), so they
  // take the plain spelling directly.
  if (!std::isfinite(v)) {
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
  }
  // %.17g always round-trips but prints noise. Scan every precision and keep
  // the shortest round-tripping text; low precisions alone would pick forms
  // like "6e+01" where "60" exists at a higher one.
  std::string best;
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) != v) continue;
    if (best.empty() || std::strlen(buf) < best.size()) best = buf;
  }
  return best;
}

void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw DataError("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace voyopt
