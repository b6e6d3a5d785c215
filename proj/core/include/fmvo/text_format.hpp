#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace fmvo::text {

// Shortest representation that round-trips (precision 0), or a fixed number
// of significant digits in %g style.
std::string format_double(double value, int significant_digits = 0);

// Strict parsers: the whole token must be consumed. Throw ParseError.
double parse_double(std::string_view token, std::size_t line = 0);
std::int64_t parse_int(std::string_view token, std::size_t line = 0);
std::uint64_t parse_uint(std::string_view token, std::size_t line = 0);

std::string_view trim(std::string_view s);

// Splits on `sep`; consecutive separators produce empty fields.
std::vector<std::string_view> split(std::string_view s, char sep);

// Splits on runs of blanks (spaces or tabs).
std::vector<std::string_view> split_whitespace(std::string_view s);

std::string join_doubles(const double* values, std::size_t count, char sep, int significant_digits = 0);

}  // namespace fmvo::text
