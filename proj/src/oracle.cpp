#include "w4o/oracle.hpp"

#include "w4o/error.hpp"

namespace w4o {

void ReflectionVerdict::validate() const {
  if (decision == Decision::Revise && revised_prompt.empty()) {
    throw Error(ErrorCode::MalformedResponse, "revise verdict without a revised prompt");
  }
}

void BackendSuite::require_complete() const {
  if (!complete()) throw Error(ErrorCode::ConfigError, "backend suite has unconfigured slots");
}

RenderedView OracleWorld::observe(const SceneState& scene) {
  RenderedView view = render(scene, camera_);
  const std::uint64_t key = view.image.digest();
  std::lock_guard lock(mutex_);
  entries_.insert_or_assign(key, Entry{scene, view});
  return view;
}

std::optional<SceneState> OracleWorld::scene_for(const RgbImage& image) const {
  std::lock_guard lock(mutex_);
  const auto it = entries_.find(image.digest());
  if (it == entries_.end() || !(it->second.view.image == image)) return std::nullopt;
  return it->second.scene;
}

std::optional<RenderedView> OracleWorld::view_for(const RgbImage& image) const {
  std::lock_guard lock(mutex_);
  const auto it = entries_.find(image.digest());
  if (it == entries_.end() || !(it->second.view.image == image)) return std::nullopt;
  return it->second.view;
}

PlanResult OraclePlanner::plan(std::string_view task, const RgbImage&) {
  TaskDecomposition d;
  try {
    d = decompose_task(task);
  } catch (const Error& e) {
    throw Error(ErrorCode::PlannerBackendFailure, e.what());
  }
  PlanResult out;
  out.subtasks = d.subtasks;
  out.targets.assign(d.subtasks.size(), d.moved_object);
  return out;
}

RgbImage OracleDreamer::dream(const RgbImage& image, std::string_view prompt) {
  const auto scene = world_->scene_for(image);
  if (!scene) throw Error(ErrorCode::BackendFailure, "oracle dreamer: input image has no registered scene");
  // Revised prompts from the oracle critic wrap the subtask in a retry instruction.
  constexpr std::string_view retry = "Regenerate the scene: ";
  if (prompt.starts_with(retry)) prompt.remove_prefix(retry.size());
  return world_->observe(oracle_future_scene(*scene, prompt)).image;
}

ReflectionVerdict OracleCritic::critique(const RgbImage& before, const RgbImage& after, std::string_view subtask) {
  const auto before_scene = world_->scene_for(before);
  if (!before_scene) throw Error(ErrorCode::BackendFailure, "oracle critic: reference image has no registered scene");
  const std::string retry = "Regenerate the scene: " + std::string(subtask);
  const auto after_scene = world_->scene_for(after);
  if (!after_scene) return ReflectionVerdict::revise(retry, "candidate does not depict a consistent scene");

  const ParsedSubtask parsed = parse_subtask(subtask);
  const SceneState expected = oracle_future_scene(*before_scene, subtask);
  const auto* got = after_scene->find(parsed.object);
  if (!got) return ReflectionVerdict::revise(retry, "moved object missing from candidate");
  const PoseError err = pose_error(got->pose, expected.object(parsed.object).pose);
  if (err.translation <= position_tol_ && err.rotation_deg <= rotation_tol_deg_) {
    return ReflectionVerdict::accept("object pose consistent with the subtask");
  }
  return ReflectionVerdict::revise(retry + ". Move only the " + parsed.object + ".",
                                   "object pose off by " + std::to_string(err.translation) + " m");
}

DepthMap OracleDepth::estimate_depth(const RgbImage& image) {
  const auto view = world_->view_for(image);
  if (!view) throw Error(ErrorCode::BackendFailure, "oracle depth: image has no registered scene");
  return view->depth;
}

PixelMask OracleSegmenter::segment(const RgbImage& image, std::string_view label) {
  const auto view = world_->view_for(image);
  const auto scene = world_->scene_for(image);
  if (!view || !scene) throw Error(ErrorCode::BackendFailure, "oracle segmenter: image has no registered scene");
  if (!scene->find(label)) return PixelMask(image.width, image.height);
  return mask_for_label(view->seg, scene->label_of(label));
}

BackendSuite make_oracle_suite(const std::shared_ptr<OracleWorld>& world) {
  return {std::make_shared<OraclePlanner>(), std::make_shared<OracleDreamer>(world),
          std::make_shared<OracleCritic>(world), std::make_shared<OracleDepth>(world),
          std::make_shared<OracleSegmenter>(world)};
}

}  // namespace w4o
