#include "fin/csv.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace fin::csv {

std::string format_double(double v) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

std::vector<std::string_view> split(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

double parse_double(std::string_view field) {
  std::string tmp(field);
  if (tmp.empty()) throw std::invalid_argument("empty numeric field");
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size()) throw std::invalid_argument("bad number '" + tmp + "'");
  return v;
}

long long parse_int(std::string_view field) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc{} || ptr != field.data() + field.size())
    throw std::invalid_argument("bad integer '" + std::string(field) + "'");
  return v;
}

}  // namespace fin::csv
