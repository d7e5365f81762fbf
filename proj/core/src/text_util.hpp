#pragma once

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "occfm/common.hpp"

// Shared by the file loaders; not installed.
namespace occfm::textutil {

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline bool blank(const std::string& s) {
  return s.find_first_not_of(" \t") == std::string::npos;
}

inline double parse_double(const std::string& tok, long line) {
  const char* s = tok.c_str();
  char* end = nullptr;
  const double v = std::strtod(s, &end);
  if (end == s || *end != '\0' || !std::isfinite(v))
    throw ParseError("bad numeric field '" + tok + "'", line);
  return v;
}

inline long parse_long(const std::string& tok, long line) {
  const char* s = tok.c_str();
  char* end = nullptr;
  const long v = std::strtol(s, &end, 10);
  if (end == s || *end != '\0')
    throw ParseError("bad integer field '" + tok + "'", line);
  return v;
}

inline std::vector<std::string> split(const std::string& s,
                                      const std::string& sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = s.find(sep, pos);
    if (next == std::string::npos) {
      out.push_back(s.substr(pos));
      return out;
    }
    out.push_back(s.substr(pos, next - pos));
    pos = next + sep.size();
  }
}

}  // namespace occfm::textutil
