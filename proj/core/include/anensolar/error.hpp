#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace anensolar {

enum class Errc {
  malformed_header,
  dimension_mismatch,
  duplicate_name,
  non_monotone_axis,
  out_of_range_value,
  io_failure,
  invalid_argument,
  unknown_variable,
  empty_range,
  insufficient_candidates,
  invalid_workflow,
  backend_unavailable,
};

std::string_view to_string(Errc code) noexcept;

/// Library-wide exception; every failure mode has its own Errc so callers
/// (and the CLI's machine-readable error line) can branch on it.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace anensolar
