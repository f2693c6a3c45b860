#pragma once

#include <charconv>
#include <string>

namespace shockmeet {

/// Shortest representation that parses back to the same double.
inline std::string format_double(double value) {
  char buffer[32];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, end);
}

}  // namespace shockmeet
