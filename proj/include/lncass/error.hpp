#pragma once

#include <stdexcept>
#include <string>

namespace lncass {

enum class ErrorKind {
  dimension_mismatch,
  invalid_argument,
  out_of_range,
  missing_value,
  parse_error,
  io_error,
  single_class,
  sampler_failure,
};

const char* to_string(ErrorKind kind);

/// Every recoverable failure in the library is reported as an Error carrying
/// a kind tag, so callers (and the CLI) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace lncass
