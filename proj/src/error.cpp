#include "physarum/error.hpp"

namespace physarum {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NonPositiveCost: return "NonPositiveCost";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptyEdgeSet: return "EmptyEdgeSet";
    case ErrorCode::DisconnectedGraph: return "DisconnectedGraph";
    case ErrorCode::GenerationFailed: return "GenerationFailed";
    case ErrorCode::InvalidInstanceFile: return "InvalidInstanceFile";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::ReactivityBoundViolated: return "ReactivityBoundViolated";
    case ErrorCode::NonPositiveReactivity: return "NonPositiveReactivity";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::StepSizeUnderflow: return "StepSizeUnderflow";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::NonPositiveBound: return "NonPositiveBound";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::NotCertified: return "NotCertified";
    case ErrorCode::UnknownPreset: return "UnknownPreset";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(error_name(code)) + ": " + detail), code_(code) {}

}  // namespace physarum
