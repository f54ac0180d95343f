#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hilite {

enum class ErrorCode {
  MissingFile,
  UnsupportedFormat,
  CorruptHeader,
  UnwritablePath,
  DimensionMismatch,
  ImageTooSmall,
  DepthTooLarge,
  InvalidArgument,
  UndefinedClass,
  NonFinite,
  OutOfRange,
  IncompatibleLevel,
  EmptyInput,
  DuplicateId,
  ParseError,
};

/// Stable snake_case name, used as the `code` field of CLI error reports.
std::string_view to_string(ErrorCode code) noexcept;

/// Domain error carrying a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hilite
