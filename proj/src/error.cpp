#include "paraling/error.hpp"

namespace paraling {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::CorruptHeader: return "CorruptHeader";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::UnknownClassName: return "UnknownClassName";
    case ErrorCode::DuplicateId: return "DuplicateId";
    case ErrorCode::EmptyClip: return "EmptyClip";
    case ErrorCode::EmptySeries: return "EmptySeries";
    case ErrorCode::CutoffOutOfRange: return "CutoffOutOfRange";
    case ErrorCode::TooManyFilters: return "TooManyFilters";
    case ErrorCode::ClipTooShort: return "ClipTooShort";
    case ErrorCode::KOutOfRange: return "KOutOfRange";
    case ErrorCode::SampleRateMismatch: return "SampleRateMismatch";
    case ErrorCode::EmptyLabels: return "EmptyLabels";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::MissingClass: return "MissingClass";
    case ErrorCode::UnreachableClass: return "UnreachableClass";
    case ErrorCode::NoExamples: return "NoExamples";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::MissingCache: return "MissingCache";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::ConstantInput: return "ConstantInput";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyClassRow: return "EmptyClassRow";
    case ErrorCode::IdMismatch: return "IdMismatch";
    case ErrorCode::NonPositiveWeights: return "NonPositiveWeights";
    case ErrorCode::MissingPrediction: return "MissingPrediction";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

ErrorCategory category(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidArgument:
    case ErrorCode::CutoffOutOfRange:
    case ErrorCode::TooManyFilters:
    case ErrorCode::KOutOfRange:
    case ErrorCode::NonPositiveWeights:
      return ErrorCategory::Config;
    case ErrorCode::NonFiniteLoss:
      return ErrorCategory::Numeric;
    default:
      return ErrorCategory::Data;
  }
}

}  // namespace paraling
