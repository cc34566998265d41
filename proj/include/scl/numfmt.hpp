#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace scl {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Whole-token parse; throws a parse error mentioning `context` otherwise.
double parse_double(std::string_view text, std::string_view context);
std::int64_t parse_int(std::string_view text, std::string_view context);

std::string_view trim(std::string_view text);

}  // namespace scl
