#include "maniapipe/common.hpp"

namespace maniapipe {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::DanglingSegment: return "DanglingSegment";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptHeader: return "CorruptHeader";
    case ErrorCode::InvalidRate: return "InvalidRate";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::InvalidFrequency: return "InvalidFrequency";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::EmptyLldSet: return "EmptyLldSet";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::EmptyTable: return "EmptyTable";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::TargetTooLarge: return "TargetTooLarge";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::BatchTooSmall: return "BatchTooSmall";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::NumericFailure: return "NumericFailure";
  }
  return "Error";
}

}  // namespace maniapipe
