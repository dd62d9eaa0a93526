#include "w4o/agents.hpp"

#include <algorithm>

namespace w4o {

void SubtaskPlan::validate() const {
  if (subtasks.empty()) throw Error(ErrorCode::EmptyPlan, "plan has no subtasks");
  for (const auto& s : subtasks) {
    if (s.empty()) throw Error(ErrorCode::EmptyPlan, "plan contains an empty subtask");
  }
  if (targets.size() != subtasks.size()) {
    throw Error(ErrorCode::PlannerBackendFailure, "planner must tag every subtask with a target object");
  }
}

ReflectionBudgetExhausted::ReflectionBudgetExhausted(std::size_t iterations, RgbImage last_candidate,
                                                     std::vector<ReflectionVerdict> verdicts,
                                                     std::vector<std::string> prompts)
    : Error(ErrorCode::ReflectionBudgetExhausted,
            "no candidate accepted within " + std::to_string(iterations) + " iterations"),
      iterations_(iterations),
      last_candidate_(std::move(last_candidate)),
      verdicts_(std::move(verdicts)),
      prompts_(std::move(prompts)) {}

SubtaskPlan plan_subtasks(std::string_view task, const RgbImage& image, PlannerBackend& planner) {
  if (task.empty()) throw Error(ErrorCode::InvalidArgument, "task must be non-empty");
  PlanResult result;
  try {
    result = planner.plan(task, image);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::PlannerBackendFailure) throw;
    throw Error(ErrorCode::PlannerBackendFailure, e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::PlannerBackendFailure, e.what());
  }
  SubtaskPlan plan{std::string(task), std::move(result.subtasks), std::move(result.targets)};
  plan.validate();
  return plan;
}

PixelMask segment_object(const RgbImage& image, std::string_view label, SegmenterBackend& segmenter) {
  if (label.empty()) throw Error(ErrorCode::InvalidArgument, "segmentation label must be non-empty");
  PixelMask mask = segmenter.segment(image, label);
  if (mask.width != image.width || mask.height != image.height) {
    throw Error(ErrorCode::DimensionMismatch, "segmentation mask does not match the image");
  }
  if (mask.count() == 0) throw Error(ErrorCode::ObjectNotFound, "'" + std::string(label) + "' not found in image");
  return mask;
}

LiftedSubgoal lift_subgoal(const RgbImage& image, const PixelMask& object_mask, const BackendSuite& suite,
                           const Observation& reference) {
  const CameraModel& cam = reference.camera;
  DepthMap depth = suite.depth_estimator->estimate_depth(image);
  depth.validate();
  if (depth.width != cam.width || depth.height != cam.height || reference.depth.width != cam.width ||
      reference.depth.height != cam.height || object_mask.width != cam.width || object_mask.height != cam.height) {
    throw Error(ErrorCode::DimensionMismatch, "subgoal depth, mask, and reference view must share the camera size");
  }

  // Background in both views: not an object in the reference, not the object of interest in the subgoal.
  PixelMask keep(cam.width, cam.height);
  std::vector<double> ratios;
  for (std::size_t i = 0; i < depth.values.size(); ++i) {
    if (object_mask.at(i)) {
      keep.bits[i] = 1;
      continue;
    }
    if (reference.seg.ids[i] != 0) continue;
    keep.bits[i] = 1;
    if (depth.valid(i) && reference.depth.valid(i)) ratios.push_back(reference.depth.values[i] / depth.values[i]);
  }
  if (ratios.size() < kMinCalibrationPixels) {
    throw Error(ErrorCode::ScaleCalibrationFailure,
                "only " + std::to_string(ratios.size()) + " shared background pixels for scale calibration");
  }
  const std::size_t mid = ratios.size() / 2;
  std::nth_element(ratios.begin(), ratios.begin() + static_cast<std::ptrdiff_t>(mid), ratios.end());
  double scale = ratios[mid];
  if (ratios.size() % 2 == 0) {
    const double lower = *std::max_element(ratios.begin(), ratios.begin() + static_cast<std::ptrdiff_t>(mid));
    scale = 0.5 * (scale + lower);
  }

  for (std::size_t i = 0; i < depth.values.size(); ++i) {
    if (depth.valid(i)) depth.values[i] *= scale;
  }
  LabelImage labels(cam.width, cam.height);
  for (std::size_t i = 0; i < labels.ids.size(); ++i) labels.ids[i] = object_mask.at(i) ? 1 : 0;

  LiftedSubgoal out;
  out.cloud = back_project_labeled(depth, cam, labels, &keep);
  out.depth = std::move(depth);
  out.scale = scale;
  return out;
}

SubgoalPrediction reflective_generate(const RgbImage& image, std::string_view subtask, std::string_view target,
                                      const BackendSuite& suite, const Observation& reference,
                                      const ReflectionOptions& options) {
  if (options.max_iters < 1) throw Error(ErrorCode::InvalidArgument, "max_iters must be >= 1");
  suite.require_complete();

  std::vector<std::string> prompts;
  std::vector<ReflectionVerdict> verdicts;
  std::string prompt(subtask);
  RgbImage candidate;
  for (std::size_t k = 0; k < options.max_iters; ++k) {
    prompts.push_back(prompt);
    ReflectionVerdict verdict;
    try {
      candidate = suite.dreamer->dream(image, prompt);
      verdict = suite.critic->critique(image, candidate, subtask);
      verdict.validate();
    } catch (const Error& e) {
      throw StepError(e.code(), "reflection iteration " + std::to_string(k) + ": " + e.what(), k,
                      std::current_exception());
    } catch (const std::exception& e) {
      throw StepError(ErrorCode::BackendFailure, "reflection iteration " + std::to_string(k) + ": " + e.what(), k,
                      std::current_exception());
    }
    verdicts.push_back(verdict);
    if (verdict.decision == Decision::Accept) {
      SubgoalPrediction out;
      out.object_mask = segment_object(candidate, target, *suite.segmenter);
      LiftedSubgoal lifted = lift_subgoal(candidate, out.object_mask, suite, reference);
      out.image = std::move(candidate);
      out.depth = std::move(lifted.depth);
      out.cloud = std::move(lifted.cloud);
      out.depth_scale = lifted.scale;
      out.target = std::string(target);
      out.iterations_used = k + 1;
      out.prompt_history = std::move(prompts);
      out.verdicts = std::move(verdicts);
      return out;
    }
    prompt = verdict.revised_prompt;
  }
  throw ReflectionBudgetExhausted(options.max_iters, std::move(candidate), std::move(verdicts), std::move(prompts));
}

std::vector<SubgoalPrediction> chain_subgoals(const RgbImage& initial, const SubtaskPlan& plan,
                                              const BackendSuite& suite, const Observation& reference,
                                              const ReflectionOptions& options) {
  plan.validate();
  std::vector<SubgoalPrediction> predictions;
  for (std::size_t i = 0; i < plan.subtasks.size(); ++i) {
    const RgbImage& input = i == 0 ? initial : predictions.back().image;
    try {
      predictions.push_back(reflective_generate(input, plan.subtasks[i], plan.targets[i], suite, reference, options));
    } catch (const Error& e) {
      throw ChainError(e.code(), "subtask " + std::to_string(i) + ": " + e.what(), i, std::current_exception(),
                       std::move(predictions));
    }
  }
  return predictions;
}

}  // namespace w4o
