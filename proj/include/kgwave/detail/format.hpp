#pragma once

#include <charconv>
#include <string>

namespace kgwave::detail {

// Shortest decimal that round-trips.
inline std::string shortest(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace kgwave::detail
