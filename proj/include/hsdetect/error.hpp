#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hsd {

enum class ErrorCode {
  // cube_io
  IoError,
  MissingMagic,
  MissingRequiredKey,
  MalformedList,
  LengthMismatch,
  InvalidValue,
  SizeMismatch,
  UnsupportedDataType,
  ShapeMismatch,
  LabelOutOfRange,
  NonMonotoneWavelengths,
  EmptyLibrary,
  // preprocess
  IndexOutOfRange,
  AllBandsRemoved,
  NonPositiveMedian,
  AxisMismatch,
  ZeroMedianPanel,
  EmptySource,
  EmptyClass,
  // detect
  TooFewSamples,
  UnrecoverablySingular,
  DimensionMismatch,
  DegenerateTarget,
  UnresolvableTarget,
  // evaluate
  SingleClass,
  NoPositives,
  EmptyScores,
  // synth
  InvalidSpec,
  // configuration / arguments
  InvalidConfig,
};

/// Coarse grouping used to pick process exit codes.
enum class ErrorCategory { Config, Data, Numeric };

std::string_view to_string(ErrorCode code) noexcept;
ErrorCategory category_of(ErrorCode code) noexcept;

/// The single exception type thrown by the library. `operation` names the
/// public function that raised it, so front-ends can report where a run failed.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string operation, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }
  const std::string& operation() const noexcept { return operation_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  ErrorCode code_;
  std::string operation_;
};

}  // namespace hsd
