#pragma once

#include <stdexcept>
#include <string>

namespace actland {

enum class ErrorCode {
  InvalidInput,
  DegenerateCloud,
  CapacityExceeded,
  GridMismatch,
  EmptyInput,
  LengthMismatch,
  ShapeMismatch,
  ThresholdUnreached,
  ConfigInvalid,
  BadMagic,
  CountMismatch,
  TruncatedFile,
  SizeExceeded,
  DegenerateInput,
  IncompatibleCurves,
  Io,
};

const char* to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so the
// CLI can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace actland
