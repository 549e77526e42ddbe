#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace verse {

/// Exception carrying a stable machine-readable code next to the message.
/// The code doubles as the `code` field of the HTTP error envelope.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace verse
