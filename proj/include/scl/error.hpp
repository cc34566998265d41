#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scl {

enum class ErrorKind {
  io,
  parse,
  validation,
  range,
  argument,
  state,
  insufficient_data,
  fit_failure,
  divergence,
  degenerate,
  coverage,
  data,
  alignment,
  model_validity,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so front ends can map
/// it to a stable exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace scl
