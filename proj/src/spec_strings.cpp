#include <charconv>
#include <cmath>
#include <string>

#include "scl/error.hpp"
#include "scl/numfmt.hpp"
#include "spec_parse.hpp"

namespace scl {

std::string format_double(double value) {
  char buffer[64];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc{}) fail(ErrorKind::io, "cannot format number");
  return std::string(buffer, end);
}

std::string_view trim(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

double parse_double(std::string_view text, std::string_view context) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    fail(ErrorKind::parse, std::string(context) + ": bad number '" + std::string(text) + "'");
  }
  return value;
}

std::int64_t parse_int(std::string_view text, std::string_view context) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  std::int64_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) {
    fail(ErrorKind::parse, std::string(context) + ": bad integer '" + std::string(text) + "'");
  }
  return value;
}

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return "io";
    case ErrorKind::parse: return "parse";
    case ErrorKind::validation: return "validation";
    case ErrorKind::range: return "range";
    case ErrorKind::argument: return "argument";
    case ErrorKind::state: return "state";
    case ErrorKind::insufficient_data: return "insufficient-data";
    case ErrorKind::fit_failure: return "fit-failure";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::coverage: return "coverage";
    case ErrorKind::data: return "data";
    case ErrorKind::alignment: return "alignment";
    case ErrorKind::model_validity: return "model-validity";
  }
  return "unknown";
}

namespace detail {

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(text.substr(start)));
      return out;
    }
    out.push_back(trim(text.substr(start, pos - start)));
    start = pos + 1;
  }
}

std::vector<std::pair<std::string_view, std::string_view>> key_values(std::string_view text,
                                                                      std::string_view what) {
  std::vector<std::pair<std::string_view, std::string_view>> out;
  if (trim(text).empty()) return out;
  for (auto token : split(text, ',')) {
    const auto eq = token.find('=');
    if (eq == std::string_view::npos || eq == 0) {
      fail(ErrorKind::parse, std::string(what) + ": expected key=value, got '" +
                                 std::string(token) + "'");
    }
    out.emplace_back(trim(token.substr(0, eq)), trim(token.substr(eq + 1)));
  }
  return out;
}

std::pair<double, double> scaled_power(std::string_view text, char variable,
                                       std::string_view what) {
  text = trim(text);
  const auto var = text.find(variable);
  if (var == std::string_view::npos) return {parse_double(text, what), 0.0};
  double scale = 1.0;
  if (var > 0) {
    auto head = trim(text.substr(0, var));
    if (head.empty() || head.back() != '*') {
      fail(ErrorKind::parse, std::string(what) + ": bad power form '" + std::string(text) + "'");
    }
    head.remove_suffix(1);
    scale = parse_double(head, what);
  }
  auto tail = trim(text.substr(var + 1));
  if (tail.empty()) return {scale, 1.0};
  if (tail.front() != '^') {
    fail(ErrorKind::parse, std::string(what) + ": bad power form '" + std::string(text) + "'");
  }
  return {scale, parse_double(tail.substr(1), what)};
}

}  // namespace detail
}  // namespace scl
