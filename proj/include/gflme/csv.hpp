#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gflme/common.hpp"

namespace gflme {

// Minimal comma-separated reader/writer for the library's file formats.
// Fields are plain (no quoting); decimal point is '.' regardless of locale.

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty()) continue;
    rows.push_back(split_csv_line(t));
  }
  return rows;
}

inline double parse_double(const std::string& s, const std::string& context) {
  const std::string t = trim(s);
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(t, &pos);
  } catch (const std::exception&) {
    throw DataError("not a number: '" + s + "' in " + context);
  }
  if (pos != t.size())
    throw DataError("trailing characters in number: '" + s + "' in " + context);
  return v;
}

inline long long parse_int(const std::string& s, const std::string& context) {
  const std::string t = trim(s);
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(t, &pos);
  } catch (const std::exception&) {
    throw DataError("not an integer: '" + s + "' in " + context);
  }
  if (pos != t.size())
    throw DataError("trailing characters in integer: '" + s + "' in " + context);
  return v;
}

}  // namespace gflme
