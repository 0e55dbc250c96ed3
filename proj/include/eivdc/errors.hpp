#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace eivdc {

/// Failure classes surfaced by the library. The CLI maps each class onto a
/// process exit code (see exit_code()).
enum class ErrorKind {
  parameter,
  usage,
  schema,
  parse,
  data,
  not_found,
  insufficient_data,
  singular_design,
  near_singular_denominator,
  degenerate_block,
  degeneracy,
  divisibility,
  too_many_blocks,
  calibration,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// 2 usage, 3 data, 4 estimation degeneracy, 5 calibration.
int exit_code(ErrorKind kind) noexcept;

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

}  // namespace eivdc
