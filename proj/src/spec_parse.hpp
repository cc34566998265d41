#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace scl::detail {

std::vector<std::string_view> split(std::string_view text, char sep);

/// `k=v,k=v` into trimmed pairs; a token without '=' is a parse error.
std::vector<std::pair<std::string_view, std::string_view>> key_values(std::string_view text,
                                                                      std::string_view what);

/// Parses `c*V^e`, `V^e`, `c` (returns {c, 0}) for variable name V.
std::pair<double, double> scaled_power(std::string_view text, char variable,
                                       std::string_view what);

}  // namespace scl::detail
