#include "fmvo/text_format.hpp"

#include <charconv>
#include <cmath>

#include "fmvo/errors.hpp"

namespace fmvo::text {

std::string format_double(double value, int significant_digits) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  std::to_chars_result res;
  if (significant_digits > 0) {
    res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, significant_digits);
  } else {
    res = std::to_chars(buf, buf + sizeof(buf), value);
  }
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view token, std::size_t line) {
  token = trim(token);
  if (token == "nan" || token == "inf" || token == "-inf") {
    throw ParseError("non-finite value '" + std::string(token) + "'", line);
  }
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (token.empty() || res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
    throw ParseError("expected a number, got '" + std::string(token) + "'", line);
  }
  return value;
}

std::int64_t parse_int(std::string_view token, std::size_t line) {
  token = trim(token);
  std::int64_t value = 0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (token.empty() || res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
    throw ParseError("expected an integer, got '" + std::string(token) + "'", line);
  }
  return value;
}

std::uint64_t parse_uint(std::string_view token, std::size_t line) {
  token = trim(token);
  std::uint64_t value = 0;
  const auto res = std::from_chars(token.data(), token.data() + token.size(), value);
  if (token.empty() || res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
    throw ParseError("expected an unsigned integer, got '" + std::string(token) + "'", line);
  }
  return value;
}

std::string_view trim(std::string_view s) {
  const auto blank = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && blank(s.front())) s.remove_prefix(1);
  while (!s.empty() && blank(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t' && s[i] != '\r') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

std::string join_doubles(const double* values, std::size_t count, char sep, int significant_digits) {
  std::string out;
  for (std::size_t i = 0; i < count; ++i) {
    if (i > 0) out.push_back(sep);
    out += format_double(values[i], significant_digits);
  }
  return out;
}

}  // namespace fmvo::text
