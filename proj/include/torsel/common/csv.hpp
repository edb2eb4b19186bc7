#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace torsel::csv {

/// Splits one line on commas. Fields in this project never contain commas
/// or quotes, so no escaping is supported.
std::vector<std::string> split(std::string_view line);

/// Reads all lines of a stream, stripping trailing '\r'.
std::vector<std::string> read_lines(std::istream& in);

std::int64_t to_int(std::string_view field, std::size_t line);
double to_double(std::string_view field, std::size_t line);
bool to_bool(std::string_view field, std::size_t line);

/// Round-trip exact formatting for doubles ("%.17g" trimmed).
std::string fmt(double v);

/// Fixed-precision formatting used for human-facing report columns.
std::string fmt_fixed(double v, int digits = 6);

}  // namespace torsel::csv
