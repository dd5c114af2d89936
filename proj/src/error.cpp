#include "actland/error.hpp"

namespace actland {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::DegenerateCloud: return "DegenerateCloud";
    case ErrorCode::CapacityExceeded: return "CapacityExceeded";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::ThresholdUnreached: return "ThresholdUnreached";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::SizeExceeded: return "SizeExceeded";
    case ErrorCode::DegenerateInput: return "DegenerateInput";
    case ErrorCode::IncompatibleCurves: return "IncompatibleCurves";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace actland
