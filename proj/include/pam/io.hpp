#ifndef PAM_IO_HPP
#define PAM_IO_HPP

// Number formatting shared by CSV and JSON writers: shortest decimal that
// round-trips, and the literal "inf" for divergent quantities.

#include <charconv>
#include <cmath>
#include <string>
#include <string_view>

namespace pam::io {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// RFC 4180 quoting when needed.
inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace pam::io

#endif  // PAM_IO_HPP
