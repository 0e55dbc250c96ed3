#include "eivdc/errors.hpp"

namespace eivdc {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::parameter: return "parameter_error";
    case ErrorKind::usage: return "usage_error";
    case ErrorKind::schema: return "schema_error";
    case ErrorKind::parse: return "parse_error";
    case ErrorKind::data: return "data_error";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::insufficient_data: return "insufficient_data";
    case ErrorKind::singular_design: return "singular_design";
    case ErrorKind::near_singular_denominator: return "near_singular_denominator";
    case ErrorKind::degenerate_block: return "degenerate_block";
    case ErrorKind::degeneracy: return "degeneracy";
    case ErrorKind::divisibility: return "divisibility_error";
    case ErrorKind::too_many_blocks: return "too_many_blocks";
    case ErrorKind::calibration: return "calibration_error";
  }
  return "unknown_error";
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::parameter:
    case ErrorKind::usage:
      return 2;
    case ErrorKind::schema:
    case ErrorKind::parse:
    case ErrorKind::data:
    case ErrorKind::not_found:
    case ErrorKind::insufficient_data:
      return 3;
    case ErrorKind::singular_design:
    case ErrorKind::near_singular_denominator:
    case ErrorKind::degenerate_block:
    case ErrorKind::degeneracy:
    case ErrorKind::divisibility:
    case ErrorKind::too_many_blocks:
      return 4;
    case ErrorKind::calibration:
      return 5;
  }
  return 1;
}

}  // namespace eivdc
