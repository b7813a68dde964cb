#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace augmetrics {

enum class ErrorCode {
  InvalidArgument,
  InvalidImage,
  FileNotFound,
  DecodeError,
  IoError,
  EmptyMask,
  OutOfBounds,
  DimensionMismatch,
  UndefinedForIdentical,
  UndefinedZeroMean,
  WindowTooLarge,
  TooFewSamples,
  NotSymmetric,
  NegativeEigenvalue,
  InsufficientImages,
  EmptyDistribution,
  OutOfRange,
  EmptyManifest,
  EmptyWindow,
  LengthMismatch,
  UnknownLabel,
  EmptyMatrix,
  SingularCovariance,
  ParseError,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidImage: return "InvalidImage";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::DecodeError: return "DecodeError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::UndefinedForIdentical: return "UndefinedForIdentical";
    case ErrorCode::UndefinedZeroMean: return "UndefinedZeroMean";
    case ErrorCode::WindowTooLarge: return "WindowTooLarge";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::NegativeEigenvalue: return "NegativeEigenvalue";
    case ErrorCode::InsufficientImages: return "InsufficientImages";
    case ErrorCode::EmptyDistribution: return "EmptyDistribution";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::EmptyManifest: return "EmptyManifest";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::UnknownLabel: return "UnknownLabel";
    case ErrorCode::EmptyMatrix: return "EmptyMatrix";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// True for failures caused by the filesystem or file contents rather than
/// by a caller violating a contract.
constexpr bool is_io_error(ErrorCode code) {
  return code == ErrorCode::FileNotFound || code == ErrorCode::DecodeError ||
         code == ErrorCode::IoError || code == ErrorCode::ParseError;
}

/// The single exception type thrown by the library. The code is stable and
/// meant for programmatic dispatch; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace augmetrics
