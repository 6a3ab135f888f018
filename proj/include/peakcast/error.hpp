#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace peakcast {

enum class ErrorKind {
  NonFiniteValue,
  DimensionMismatch,
  EmptySequence,
  InvalidProbability,
  OutOfSupport,
  InfiniteMean,
  InvalidQuantile,
  InvalidParameter,
  InsufficientExceedances,
  NonConvergence,
  EmptyBatch,
  EmptyDataset,
  DivergedLoss,
  SingularDesign,
  TooShort,
  ParseError,
  NonMonotonicTimestamps,
  GapDetected,
  DegenerateSeries,
  ZeroTarget,
  NoExceedances,
  IncompatibleBundle,
  IoError,
  UsageError,
};

std::string_view to_string(ErrorKind kind);

// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace peakcast
