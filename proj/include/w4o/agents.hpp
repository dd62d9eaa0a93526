#pragma once

#include <cstddef>
#include <exception>
#include <string>
#include <string_view>
#include <vector>

#include "w4o/backends.hpp"
#include "w4o/error.hpp"
#include "w4o/observation.hpp"

namespace w4o {

struct SubtaskPlan {
  std::string task;
  std::vector<std::string> subtasks;
  /// Object id of interest for each subtask, as tagged by the planner backend.
  std::vector<std::string> targets;

  void validate() const;
};

struct SubgoalPrediction {
  RgbImage image;
  DepthMap depth;
  /// Object points (label 1) and shared background points (label 0), world frame.
  PointCloud cloud;
  PixelMask object_mask;
  std::string target;
  std::size_t iterations_used = 0;
  std::vector<std::string> prompt_history;
  std::vector<ReflectionVerdict> verdicts;
  double depth_scale = 1.0;
};

class ReflectionBudgetExhausted : public Error {
 public:
  ReflectionBudgetExhausted(std::size_t iterations, RgbImage last_candidate, std::vector<ReflectionVerdict> verdicts,
                            std::vector<std::string> prompts);

  std::size_t iterations() const { return iterations_; }
  const RgbImage& last_candidate() const { return last_candidate_; }
  const std::vector<ReflectionVerdict>& verdicts() const { return verdicts_; }
  const std::vector<std::string>& prompts() const { return prompts_; }

 private:
  std::size_t iterations_;
  RgbImage last_candidate_;
  std::vector<ReflectionVerdict> verdicts_;
  std::vector<std::string> prompts_;
};

/// A failure inside a sequence of steps: keeps the original code, the failing step index,
/// the steps completed so far, and the original exception.
class StepError : public Error {
 public:
  StepError(ErrorCode code, const std::string& message, std::size_t index, std::exception_ptr cause)
      : Error(code, message), index_(index), cause_(std::move(cause)) {}

  std::size_t index() const { return index_; }
  const std::exception_ptr& cause() const { return cause_; }

 private:
  std::size_t index_;
  std::exception_ptr cause_;
};

class ChainError : public StepError {
 public:
  ChainError(ErrorCode code, const std::string& message, std::size_t index, std::exception_ptr cause,
             std::vector<SubgoalPrediction> completed)
      : StepError(code, message, index, std::move(cause)), completed_(std::move(completed)) {}

  const std::vector<SubgoalPrediction>& completed() const { return completed_; }

 private:
  std::vector<SubgoalPrediction> completed_;
};

SubtaskPlan plan_subtasks(std::string_view task, const RgbImage& image, PlannerBackend& planner);

PixelMask segment_object(const RgbImage& image, std::string_view label, SegmenterBackend& segmenter);

struct LiftedSubgoal {
  DepthMap depth;
  PointCloud cloud;
  double scale = 1.0;
};

inline constexpr std::size_t kMinCalibrationPixels = 100;

/// Metric depth and cloud for a generated image. The estimated depth is rescaled by the median
/// ratio reference/estimate over pixels that are background in both views.
LiftedSubgoal lift_subgoal(const RgbImage& image, const PixelMask& object_mask, const BackendSuite& suite,
                           const Observation& reference);

struct ReflectionOptions {
  std::size_t max_iters = 3;
};

/// Dream -> critique -> revise until accepted, then segment and lift the accepted image.
SubgoalPrediction reflective_generate(const RgbImage& image, std::string_view subtask, std::string_view target,
                                      const BackendSuite& suite, const Observation& reference,
                                      const ReflectionOptions& options = {});

/// Each subgoal after the first is generated from the previous generated image.
std::vector<SubgoalPrediction> chain_subgoals(const RgbImage& initial, const SubtaskPlan& plan,
                                              const BackendSuite& suite, const Observation& reference,
                                              const ReflectionOptions& options = {});

}  // namespace w4o
