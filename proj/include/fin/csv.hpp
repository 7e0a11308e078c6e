#pragma once

// Minimal CSV helpers shared by the corpus, dataset and report writers.

#include <string>
#include <string_view>
#include <vector>

namespace fin::csv {

/// 17 significant digits; round-trips every finite double.
std::string format_double(double v);

/// Splits one line on commas. No quoting support; none of our schemas need it.
std::vector<std::string_view> split(std::string_view line);

/// Strict parse of a full field; throws std::invalid_argument otherwise.
double parse_double(std::string_view field);
long long parse_int(std::string_view field);

}  // namespace fin::csv
