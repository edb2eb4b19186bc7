#include "torsel/common/csv.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <istream>

#include "torsel/common/error.hpp"

namespace torsel::csv {

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

std::int64_t to_int(std::string_view field, std::size_t line) {
  std::int64_t v = 0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc{} || ptr != end || field.empty())
    throw ParseError("expected integer, got '" + std::string(field) + "'", line);
  return v;
}

double to_double(std::string_view field, std::size_t line) {
  // from_chars for double is unavailable on older libstdc++; strtod on a
  // bounded copy is equivalent here.
  std::string copy(field);
  char* end = nullptr;
  const double v = std::strtod(copy.c_str(), &end);
  if (copy.empty() || end != copy.c_str() + copy.size())
    throw ParseError("expected number, got '" + copy + "'", line);
  return v;
}

bool to_bool(std::string_view field, std::size_t line) {
  if (field == "1" || field == "true") return true;
  if (field == "0" || field == "false") return false;
  throw ParseError("expected boolean, got '" + std::string(field) + "'", line);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  // Prefer the shortest representation that still round-trips.
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[64];
    std::snprintf(shorter, sizeof shorter, "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == v) return shorter;
  }
  return buf;
}

std::string fmt_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace torsel::csv
