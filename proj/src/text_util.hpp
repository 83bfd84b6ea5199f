#pragma once

// Small text helpers shared by the file readers. Not part of the public API.

#include <charconv>
#include <cstdio>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rover/errors.hpp"

namespace rover::detail
{

inline std::string_view trim(std::string_view s)
{
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep)
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(s.substr(start)));
      return out;
    }
    out.push_back(trim(s.substr(start, pos - start)));
    start = pos + 1;
  }
}

inline std::optional<double> to_double(std::string_view s)
{
  s = trim(s);
  if (!s.empty() && s.front() == '+') {
    s.remove_prefix(1);
  }
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    return std::nullopt;
  }
  return value;
}

inline double require_double(std::string_view s, int line, std::string_view what)
{
  const auto v = to_double(s);
  if (!v) {
    throw DataError("malformed " + std::string(what) + " '" + std::string(s) + "'", line);
  }
  return *v;
}

inline std::optional<long long> to_int(std::string_view s)
{
  s = trim(s);
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    return std::nullopt;
  }
  return value;
}

struct KeyValue
{
  std::string key;
  std::string value;
  int line{0};
};

/// Strips `#` comments and blank lines; every other line must be `key = value`.
/// Stops (without consuming further) at a line equal to `stop_marker` when given,
/// and reports the line number reached through `line_no`.
inline std::vector<KeyValue> read_key_values(
  std::istream & in, int & line_no, std::string_view stop_marker = {})
{
  std::vector<KeyValue> out;
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    if (!stop_marker.empty() && line == stop_marker) {
      return out;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw DataError("expected 'key = value'", line_no);
    }
    out.push_back({std::string(trim(line.substr(0, eq))), std::string(trim(line.substr(eq + 1))), line_no});
  }
  return out;
}

/// Fixed-point formatting with `decimals` digits; "-0.000000" is folded to "0.000000".
inline std::string fixed(double v, int decimals = 6)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  std::string s(buf);
  if (s.front() == '-' && s.find_first_not_of("-0.") == std::string::npos) {
    s.erase(0, 1);
  }
  return s;
}

/// Shortest round-trippable representation.
inline std::string exact(double v)
{
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace rover::detail
