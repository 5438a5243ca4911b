#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace treelb {

enum class ErrorCode {
  invalid_argument,
  arity_mismatch,
  unsupported_target,
  infinite_smoothness,
  invalid_spec,
  empty_sequence,
  conflicting_restriction,
  infeasible_epsilon,
  too_large_k,
  not_found,
  io_failure,
  invalid_config,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it to an exit status without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace treelb
