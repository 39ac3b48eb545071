#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace cpa {

// Shortest round-trip decimal form; identical on every run, "inf" for infinity.
inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace cpa
