#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace w4o {

enum class ErrorCode {
  InvalidArgument,
  // geometry
  NonPositiveDepth,
  DimensionMismatch,
  TooFewPoints,
  DegenerateConfiguration,
  // scene_sim
  UnknownTemplate,
  PlacementFailure,
  UnknownObject,
  UnparsableSubtask,
  // world_agents
  PlannerBackendFailure,
  EmptyPlan,
  ReflectionBudgetExhausted,
  BackendFailure,
  ScaleCalibrationFailure,
  ObjectNotFound,
  // backend_gateway
  Timeout,
  RetriesExhausted,
  MalformedResponse,
  RemoteError,
  PortUnavailable,
  // manip_policy
  ObjectMissing,
  TooFewMatches,
  EmptyCloud,
  NoCandidates,
  NoFeasibleGrasp,
  GoalInCollision,
  PlanningFailure,
  // orchestrator
  ConfigError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace w4o
