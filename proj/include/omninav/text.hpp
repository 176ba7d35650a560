#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace omninav::text {

/// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

/// Splits on runs of whitespace; empty fields are dropped.
std::vector<std::string_view> split_ws(std::string_view line);
/// Splits on a single delimiter; empty fields are kept.
std::vector<std::string_view> split(std::string_view line, char delim);

std::string_view trim(std::string_view s);

/// Strict parse: the whole field must be consumed. Throws std::invalid_argument.
double parse_double(std::string_view field);
long long parse_int(std::string_view field);

/// Drops a trailing '#' comment and surrounding whitespace.
std::string_view strip_comment(std::string_view line);

}  // namespace omninav::text
