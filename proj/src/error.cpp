#include "lvs/error.hpp"

namespace lvs {

std::string_view to_string(error_code code) noexcept {
  switch (code) {
    case error_code::io: return "io";
    case error_code::malformed_header: return "malformed_header";
    case error_code::dimension_mismatch: return "dimension_mismatch";
    case error_code::non_finite: return "non_finite";
    case error_code::non_monotone_timestamps: return "non_monotone_timestamps";
    case error_code::zero_norm: return "zero_norm";
    case error_code::invalid_argument: return "invalid_argument";
    case error_code::out_of_range: return "out_of_range";
    case error_code::instance_too_large: return "instance_too_large";
    case error_code::parse_error: return "parse_error";
    case error_code::transport: return "transport";
    case error_code::timeout: return "timeout";
    case error_code::missing_reply: return "missing_reply";
    case error_code::id_mismatch: return "id_mismatch";
    case error_code::capacity_exceeded: return "capacity_exceeded";
  }
  return "unknown";
}

bool is_validation_error(error_code code) noexcept {
  switch (code) {
    case error_code::io:
    case error_code::transport:
    case error_code::timeout:
    case error_code::parse_error:
      return false;
    default:
      return true;
  }
}

namespace {

std::string format_message(error_code code, const std::string & message,
                           std::optional<int64_t> row) {
  std::string out(to_string(code));
  out += ": ";
  out += message;
  if (row) {
    out += " (row " + std::to_string(*row) + ")";
  }
  return out;
}

}  // namespace

error::error(error_code code, const std::string & message, std::optional<int64_t> row)
    : std::runtime_error(format_message(code, message, row)), code_(code), row_(row) {}

}  // namespace lvs
