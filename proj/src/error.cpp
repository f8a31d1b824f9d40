#include "nercc/error.hpp"

namespace nercc {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::TooFewKnots: return "TooFewKnots";
    case ErrorCode::NonIncreasingKnots: return "NonIncreasingKnots";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::NonFiniteData: return "NonFiniteData";
    case ErrorCode::NonFiniteQuery: return "NonFiniteQuery";
    case ErrorCode::NegativeLambda: return "NegativeLambda";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::InvalidNodeCount: return "InvalidNodeCount";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::DecodingInfeasible: return "DecodingInfeasible";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingTensorFile: return "MissingTensorFile";
    case ErrorCode::NonFiniteResult: return "NonFiniteResult";
    case ErrorCode::CountOutOfRange: return "CountOutOfRange";
    case ErrorCode::ZeroBaseAccuracy: return "ZeroBaseAccuracy";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::ModelLoadError: return "ModelLoadError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::UnknownColumn: return "UnknownColumn";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
  }
  return "Unknown";
}

}  // namespace nercc
