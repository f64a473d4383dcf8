#include "fgir/error.hpp"

namespace fgir {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kNonFinite: return "non_finite";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kBadFormat: return "bad_format";
    case ErrorCode::kOutOfRange: return "out_of_range";
    case ErrorCode::kDuplicateId: return "duplicate_id";
    case ErrorCode::kMissingId: return "missing_id";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace fgir
