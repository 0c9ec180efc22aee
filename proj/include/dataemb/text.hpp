#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace dataemb {

// Splits UTF-8 text into code points. Invalid bytes become single-byte units.
std::vector<std::string> utf8_chars(std::string_view text);

std::vector<std::string_view> split_whitespace(std::string_view text);

// printf-style %.*g; 17 significant digits round-trip a double exactly.
std::string format_double(double v, int significant = 17);

// Fixed-point with `decimals` digits after the point.
std::string format_fixed(double v, int decimals);

}  // namespace dataemb
