#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "radapt/error.hpp"

namespace radapt {

// Minimal unquoted CSV: comma separated, mandatory header row, LF or CRLF.
struct CsvTable {
  std::string path;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::ptrdiff_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<std::ptrdiff_t>(i);
    return -1;
  }

  void require_columns(std::initializer_list<std::string_view> names) const {
    for (auto n : names)
      if (column(n) < 0) throw ParseError(path, 1, "missing column '" + std::string(n) + "'");
  }

  const std::string& get(std::size_t row, std::string_view name) const {
    return rows[row][static_cast<std::size_t>(column(name))];
  }

  long get_long(std::size_t row, std::string_view name, std::size_t line) const {
    const auto& s = get(row, name);
    long v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty())
      throw ParseError(path, line, "column '" + std::string(name) + "': not an integer: '" + s + "'");
    return v;
  }

  double get_double(std::size_t row, std::string_view name, std::size_t line) const {
    return parse_double(get(row, name), path, line);
  }

  static double parse_double(const std::string& s, const std::string& path, std::size_t line) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      throw ParseError(path, line, "not a number: '" + s + "'");
    }
    if (used != s.size()) throw ParseError(path, line, "not a number: '" + s + "'");
    return v;
  }
};

inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (;;) {
    const auto next = line.find(',', pos);
    out.emplace_back(line.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

inline CsvTable parse_csv(const std::string& text, const std::string& path) {
  CsvTable t;
  t.path = path;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (lineno == 1) {
      t.header = split_csv_line(line);
      continue;
    }
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != t.header.size())
      throw ParseError(path, lineno,
                       "expected " + std::to_string(t.header.size()) + " fields, got " + std::to_string(fields.size()));
    t.rows.push_back(std::move(fields));
  }
  if (lineno == 0 || t.header.empty() || (t.header.size() == 1 && t.header[0].empty()))
    throw ParseError(path, 1, "missing header row");
  return t;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileError(path, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline CsvTable read_csv(const std::string& path) { return parse_csv(read_text_file(path), path); }

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileError(path, "cannot write file");
  out << content;
  if (!out) throw FileError(path, "write failed");
}

// Fixed-precision formatting so reports are byte-identical across runs.
inline std::string fmt_double(double v, int precision = 6) {
  if (v != v) return "N/A";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

}  // namespace radapt
