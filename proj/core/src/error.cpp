#include "treelb/error.hpp"

namespace treelb {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::arity_mismatch: return "arity-mismatch";
    case ErrorCode::unsupported_target: return "unsupported-target";
    case ErrorCode::infinite_smoothness: return "infinite-L";
    case ErrorCode::invalid_spec: return "invalid-spec";
    case ErrorCode::empty_sequence: return "empty-sequence";
    case ErrorCode::conflicting_restriction: return "conflicting-restriction";
    case ErrorCode::infeasible_epsilon: return "infeasible-epsilon";
    case ErrorCode::too_large_k: return "too-large-k";
    case ErrorCode::not_found: return "not-found";
    case ErrorCode::io_failure: return "io-failure";
    case ErrorCode::invalid_config: return "invalid-config";
  }
  return "unknown";
}

}  // namespace treelb
