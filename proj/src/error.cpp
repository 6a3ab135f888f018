#include "peakcast/error.hpp"

namespace peakcast {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::EmptySequence: return "EmptySequence";
    case ErrorKind::InvalidProbability: return "InvalidProbability";
    case ErrorKind::OutOfSupport: return "OutOfSupport";
    case ErrorKind::InfiniteMean: return "InfiniteMean";
    case ErrorKind::InvalidQuantile: return "InvalidQuantile";
    case ErrorKind::InvalidParameter: return "InvalidParameter";
    case ErrorKind::InsufficientExceedances: return "InsufficientExceedances";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::EmptyBatch: return "EmptyBatch";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::DivergedLoss: return "DivergedLoss";
    case ErrorKind::SingularDesign: return "SingularDesign";
    case ErrorKind::TooShort: return "TooShort";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::NonMonotonicTimestamps: return "NonMonotonicTimestamps";
    case ErrorKind::GapDetected: return "GapDetected";
    case ErrorKind::DegenerateSeries: return "DegenerateSeries";
    case ErrorKind::ZeroTarget: return "ZeroTarget";
    case ErrorKind::NoExceedances: return "NoExceedances";
    case ErrorKind::IncompatibleBundle: return "IncompatibleBundle";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::UsageError: return "UsageError";
  }
  return "Unknown";
}

}  // namespace peakcast
