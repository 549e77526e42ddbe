#include "verse/decimal.hpp"

#include <charconv>
#include <system_error>

#include "verse/error.hpp"

namespace verse {

std::string format_decimal(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

double parse_decimal(const std::string& text) {
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw Error("bad_decimal", "not a decimal number: " + text);
  }
  return value;
}

}  // namespace verse
