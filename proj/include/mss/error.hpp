#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mss {

enum class ErrorCode {
  invalid_argument,
  dimension_mismatch,
  boundary_node,
  too_coarse,
  unknown_preset,
  divergence,
  stagnation,
  singular_linearization,
  precondition,
  parse,
  io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::dimension_mismatch: return "dimension_mismatch";
    case ErrorCode::boundary_node: return "boundary_node";
    case ErrorCode::too_coarse: return "too_coarse";
    case ErrorCode::unknown_preset: return "unknown_preset";
    case ErrorCode::divergence: return "divergence";
    case ErrorCode::stagnation: return "stagnation";
    case ErrorCode::singular_linearization: return "singular_linearization";
    case ErrorCode::precondition: return "precondition";
    case ErrorCode::parse: return "parse";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace mss
