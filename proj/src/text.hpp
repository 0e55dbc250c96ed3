#pragma once

// Small parsing helpers shared by the config readers. Internal to the library.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "eivdc/errors.hpp"

namespace eivdc::text {

inline std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

inline double to_double(const std::string& key, const std::string& value) {
  const std::string t = trim(value);
  const char* begin = t.data();
  if (!t.empty() && *begin == '+') ++begin;
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, t.data() + t.size(), out);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(out)) {
    fail(ErrorKind::parse, key + ": not a finite number: '" + value + "'");
  }
  return out;
}

template <class Int>
Int to_int(const std::string& key, const std::string& value) {
  const std::string t = trim(value);
  Int out = 0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), out);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    fail(ErrorKind::parse, key + ": not an integer: '" + value + "'");
  }
  return out;
}

inline bool to_bool(const std::string& key, const std::string& value) {
  const std::string t = trim(value);
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  fail(ErrorKind::parse, key + ": not a boolean: '" + value + "'");
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline std::string format(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace eivdc::text
