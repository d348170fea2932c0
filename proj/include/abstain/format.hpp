#pragma once

#include <charconv>
#include <string>

namespace abstain {

// Shortest decimal representation that round-trips to the same double.
// Used everywhere numbers land in CSV or tables so the same value always
// prints identically.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace abstain
