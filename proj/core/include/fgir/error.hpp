#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fgir {

/// Classification of data errors. Every value maps to CLI exit code 2.
enum class ErrorCode {
  kInvalidArgument,
  kDimensionMismatch,
  kNonFinite,
  kShapeMismatch,
  kTruncated,
  kBadFormat,
  kOutOfRange,
  kDuplicateId,
  kMissingId,
  kIo,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception thrown for any invalid input reaching the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fgir
