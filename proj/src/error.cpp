#include "w4o/error.hpp"

namespace w4o {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::UnknownTemplate: return "UnknownTemplate";
    case ErrorCode::PlacementFailure: return "PlacementFailure";
    case ErrorCode::UnknownObject: return "UnknownObject";
    case ErrorCode::UnparsableSubtask: return "UnparsableSubtask";
    case ErrorCode::PlannerBackendFailure: return "PlannerBackendFailure";
    case ErrorCode::EmptyPlan: return "EmptyPlan";
    case ErrorCode::ReflectionBudgetExhausted: return "ReflectionBudgetExhausted";
    case ErrorCode::BackendFailure: return "BackendFailure";
    case ErrorCode::ScaleCalibrationFailure: return "ScaleCalibrationFailure";
    case ErrorCode::ObjectNotFound: return "ObjectNotFound";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::RetriesExhausted: return "RetriesExhausted";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::RemoteError: return "RemoteError";
    case ErrorCode::PortUnavailable: return "PortUnavailable";
    case ErrorCode::ObjectMissing: return "ObjectMissing";
    case ErrorCode::TooFewMatches: return "TooFewMatches";
    case ErrorCode::EmptyCloud: return "EmptyCloud";
    case ErrorCode::NoCandidates: return "NoCandidates";
    case ErrorCode::NoFeasibleGrasp: return "NoFeasibleGrasp";
    case ErrorCode::GoalInCollision: return "GoalInCollision";
    case ErrorCode::PlanningFailure: return "PlanningFailure";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace w4o
