#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "w4o/geometry.hpp"
#include "w4o/image.hpp"
#include "w4o/shapes.hpp"

namespace w4o {

using Rgb = std::array<std::uint8_t, 3>;

struct SceneObject {
  std::string id;
  Shape shape;
  RigidTransform pose;
  Rgb color{128, 128, 128};

  PosedShape posed() const { return {&shape, pose}; }
  PosedShape posed_at(const RigidTransform& p) const { return {&shape, p}; }

  bool operator==(const SceneObject&) const = default;
};

/// Axis-aligned slab centered on the world origin in x/y; `height` is the top surface.
struct TableSlab {
  double size_x = 0.8;
  double size_y = 0.6;
  double height = 0.75;
  double thickness = 0.05;

  Shape shape() const { return Shape::box(size_x, size_y, thickness); }
  RigidTransform pose() const { return RigidTransform::from_translation(Vec3(0, 0, height - thickness / 2)); }

  bool operator==(const TableSlab&) const = default;
};

/// Magnitudes used by the subtask semantics and contact checks.
struct SceneParams {
  double lift_height = 0.15;
  double horizontal_step = 0.10;
  double over_tolerance = 0.01;
  double away_clearance = 0.05;
  double contact_tolerance = 0.001;

  bool operator==(const SceneParams&) const = default;
};

struct SceneState {
  std::vector<SceneObject> objects;
  std::optional<TableSlab> table;
  /// World "up": the direction opposing gravity. Lifting moves along +gravity_axis.
  Vec3 gravity_axis = Vec3::UnitZ();
  SceneParams params;

  const SceneObject* find(std::string_view id) const;
  const SceneObject& object(std::string_view id) const;  // throws UnknownObject
  /// Segmentation id of an object (1-based position); throws UnknownObject.
  std::uint16_t label_of(std::string_view id) const;

  void validate() const;

  bool operator==(const SceneState& rhs) const {
    return objects == rhs.objects && table == rhs.table && gravity_axis == rhs.gravity_axis && params == rhs.params;
  }
};

struct RenderedView {
  RgbImage image;
  DepthMap depth;
  LabelImage seg;
};

inline constexpr Rgb kTableColor{150, 120, 90};
inline constexpr Rgb kBackgroundColor{0, 0, 0};

struct TaskTemplate {
  std::string name;
  std::string default_task;
  std::string moved_object;
  std::string reference_object;
};

const std::vector<TaskTemplate>& task_templates();
const TaskTemplate& find_template(std::string_view name);  // throws UnknownTemplate

/// Deterministic rejection-sampled layout for a registered template.
SceneState sample_layout(std::string_view template_name, std::uint64_t seed);

/// Fixed tabletop camera used by episodes: 320x240, looking at the table from the front.
CameraModel default_camera(const SceneState& scene);

RenderedView render(const SceneState& scene, const CameraModel& cam);

SceneState apply_object_motion(const SceneState& scene, std::string_view object_id, const RigidTransform& motion);

enum class MotionKind { Up, Down, Left, Right, Forward, Backward, Over, AwayFrom, PlaceOn };

struct ParsedSubtask {
  MotionKind kind = MotionKind::Up;
  std::string object;
  std::string reference;  // for Over, AwayFrom, PlaceOn ("table" allowed for PlaceOn)
};

/// Parses the fixed subtask grammar; throws UnparsableSubtask.
ParsedSubtask parse_subtask(std::string_view text);

struct TaskDecomposition {
  std::string moved_object;
  std::vector<std::string> subtasks;
};

/// Scripted expansion of "put the X in the Y" and "take the X off the Y" into three subtasks.
TaskDecomposition decompose_task(std::string_view task);

SceneState oracle_future_scene(const SceneState& scene, std::string_view subtask);

/// True iff the object at `candidate_pose` penetrates another object or the table beyond contact_tolerance.
bool check_collision(const SceneState& scene, std::string_view object_id, const RigidTransform& candidate_pose);
/// Distance from the object at `candidate_pose` to the nearest other object or table.
double clearance(const SceneState& scene, std::string_view object_id, const RigidTransform& candidate_pose);

/// Point probe test; objects named in `ignore` are skipped.
bool point_in_collision(const SceneState& scene, const Vec3& p, const std::vector<std::string>& ignore);
double point_clearance(const SceneState& scene, const Vec3& p, const std::vector<std::string>& ignore);

/// Height of the object's lowest / highest point along gravity_axis.
double bottom_height(const SceneState& scene, const SceneObject& obj, const RigidTransform& pose);
double top_height(const SceneState& scene, const SceneObject& obj, const RigidTransform& pose);

// Scene config document: {table, objects, camera}; quaternions are wxyz.
struct SceneDocument {
  SceneState scene;
  std::optional<CameraModel> camera;
};

nlohmann::json pose_to_json(const RigidTransform& pose);
RigidTransform pose_from_json(const nlohmann::json& j);
nlohmann::json camera_to_json(const CameraModel& cam);
CameraModel camera_from_json(const nlohmann::json& j);
nlohmann::json scene_to_json(const SceneState& scene, const std::optional<CameraModel>& camera = std::nullopt);
SceneDocument scene_from_json(const nlohmann::json& j);

}  // namespace w4o
