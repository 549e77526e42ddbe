#pragma once

#include <string>

namespace verse {

/// Shortest decimal text that parses back to exactly `value`.
std::string format_decimal(double value);

/// Inverse of format_decimal; throws verse::Error("bad_decimal") on junk.
double parse_decimal(const std::string& text);

}  // namespace verse
