#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace paraling {

enum class ErrorCode {
  // corpus
  NotFound,
  UnsupportedFormat,
  CorruptHeader,
  SchemaMismatch,
  UnknownClassName,
  DuplicateId,
  EmptyClip,
  EmptySeries,
  // dsp
  CutoffOutOfRange,
  TooManyFilters,
  ClipTooShort,
  KOutOfRange,
  SampleRateMismatch,
  // sampling
  EmptyLabels,
  LabelOutOfRange,
  MissingClass,
  UnreachableClass,
  NoExamples,
  // net / losses
  ShapeMismatch,
  MissingCache,
  NonFiniteLoss,
  ConstantInput,
  LengthMismatch,
  EmptyClassRow,
  // ensemble
  IdMismatch,
  NonPositiveWeights,
  MissingPrediction,
  // general
  InvalidArgument,
  InvalidConfig,
  IoError,
};

std::string_view to_string(ErrorCode code);

/// Broad failure class, used by the CLI to pick an exit code.
enum class ErrorCategory { Data, Config, Numeric };

ErrorCategory category(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace paraling
