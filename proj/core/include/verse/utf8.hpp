#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace verse::utf8 {

/// True when `bytes` is well-formed UTF-8 (no overlongs, no surrogates).
bool valid(std::string_view bytes);

/// Number of code points; assumes valid input.
std::size_t length(std::string_view text);

/// Splits valid UTF-8 into one string per code point.
std::vector<std::string> code_points(std::string_view text);

}  // namespace verse::utf8
