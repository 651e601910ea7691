#pragma once

#include <charconv>
#include <optional>
#include <string>
#include <string_view>

namespace fqs {

/// Shortest decimal that reads back to the same double.
inline std::string format_double(double d) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, d);
  (void)ec;
  return std::string(buf, ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
  double d = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), d);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return d;
}

}  // namespace fqs
