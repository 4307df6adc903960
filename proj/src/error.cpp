#include "hsdetect/error.hpp"

namespace hsd {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MissingMagic: return "MissingMagic";
    case ErrorCode::MissingRequiredKey: return "MissingRequiredKey";
    case ErrorCode::MalformedList: return "MalformedList";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InvalidValue: return "InvalidValue";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::UnsupportedDataType: return "UnsupportedDataType";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::NonMonotoneWavelengths: return "NonMonotoneWavelengths";
    case ErrorCode::EmptyLibrary: return "EmptyLibrary";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::AllBandsRemoved: return "AllBandsRemoved";
    case ErrorCode::NonPositiveMedian: return "NonPositiveMedian";
    case ErrorCode::AxisMismatch: return "AxisMismatch";
    case ErrorCode::ZeroMedianPanel: return "ZeroMedianPanel";
    case ErrorCode::EmptySource: return "EmptySource";
    case ErrorCode::EmptyClass: return "EmptyClass";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::UnrecoverablySingular: return "UnrecoverablySingular";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegenerateTarget: return "DegenerateTarget";
    case ErrorCode::UnresolvableTarget: return "UnresolvableTarget";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::NoPositives: return "NoPositives";
    case ErrorCode::EmptyScores: return "EmptyScores";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

ErrorCategory category_of(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidSpec:
      return ErrorCategory::Config;
    case ErrorCode::NonPositiveMedian:
    case ErrorCode::ZeroMedianPanel:
    case ErrorCode::TooFewSamples:
    case ErrorCode::UnrecoverablySingular:
    case ErrorCode::DegenerateTarget:
      return ErrorCategory::Numeric;
    default:
      return ErrorCategory::Data;
  }
}

Error::Error(ErrorCode code, std::string operation, const std::string& detail)
    : std::runtime_error(operation + ": " + std::string(to_string(code)) +
                         (detail.empty() ? std::string() : ": " + detail)),
      code_(code),
      operation_(std::move(operation)) {}

}  // namespace hsd
