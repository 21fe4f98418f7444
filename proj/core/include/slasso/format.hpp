#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace slasso {

/// Locale-independent text for a double with 17 significant digits, enough
/// for an exact round trip. Non-finite values print as nan / inf / -inf.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

}  // namespace slasso
