// SPDX-License-Identifier: Apache-2.0

#ifndef BFI_CSV_HPP
#define BFI_CSV_HPP

#include <charconv>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace bfi {

/// Shortest text that reads back to the same double.
inline std::string format_number(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

/// Inverse of format_number. Unlike std::stod it accepts subnormals, which
/// bit flips produce routinely. Throws std::invalid_argument.
inline double parse_number(std::string_view text) {
  double v = 0.0;
  const auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec == std::errc::invalid_argument || r.ptr != text.data() + text.size())
    throw std::invalid_argument("not a number: " + std::string(text));
  return v;  // out-of-range results saturate or underflow like the written value did
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string cell;
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace bfi

#endif  // BFI_CSV_HPP
