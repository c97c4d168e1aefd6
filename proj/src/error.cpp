#include "lncass/error.hpp"

namespace lncass {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::dimension_mismatch: return "dimension_mismatch";
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::out_of_range: return "out_of_range";
    case ErrorKind::missing_value: return "missing_value";
    case ErrorKind::parse_error: return "parse_error";
    case ErrorKind::io_error: return "io_error";
    case ErrorKind::single_class: return "single_class";
    case ErrorKind::sampler_failure: return "sampler_failure";
  }
  return "unknown";
}

}  // namespace lncass
