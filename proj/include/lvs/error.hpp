#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace lvs {

enum class error_code : int32_t {
  io = 1,
  malformed_header,
  dimension_mismatch,
  non_finite,
  non_monotone_timestamps,
  zero_norm,
  invalid_argument,
  out_of_range,
  instance_too_large,
  parse_error,
  transport,
  timeout,
  missing_reply,
  id_mismatch,
  capacity_exceeded,
};

std::string_view to_string(error_code code) noexcept;

// Codes that describe bad input rather than a failed environment. The CLI maps
// these to exit status 2.
bool is_validation_error(error_code code) noexcept;

class error : public std::runtime_error {
 public:
  error(error_code code, const std::string & message,
        std::optional<int64_t> row = std::nullopt);

  error_code code() const noexcept { return code_; }
  // Offending row (0-based) for per-row validation failures.
  std::optional<int64_t> row() const noexcept { return row_; }

 private:
  error_code code_;
  std::optional<int64_t> row_;
};

}  // namespace lvs
