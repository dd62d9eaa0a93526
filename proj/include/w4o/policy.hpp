#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "w4o/agents.hpp"
#include "w4o/error.hpp"
#include "w4o/geometry.hpp"
#include "w4o/observation.hpp"
#include "w4o/scene.hpp"

namespace w4o {

class OracleWorld;

inline constexpr double kMaxGripperWidth = 0.08;

/// Gripper frame: x is the closing axis, z the approach direction.
struct GraspPose {
  RigidTransform pose;
  double width = 0.0;
  double score = 0.0;

  Vec3 center() const { return pose.translation; }
  Vec3 approach() const { return pose.rotation.col(2); }
  Vec3 closing_axis() const { return pose.rotation.col(0); }
  void validate() const;
};

enum class GripperCommand { Open, Close, Hold };
std::string_view to_string(GripperCommand c);

struct Trajectory {
  std::vector<RigidTransform> waypoints;
  std::vector<GripperCommand> gripper_commands;

  std::size_t size() const { return waypoints.size(); }
  double length() const;
  void validate(double max_step = 0.02) const;
};

struct ActionRecord {
  std::size_t subtask_index = 0;
  std::optional<GraspPose> grasp;
  std::optional<RigidTransform> goal_transform;
  double registration_rmse = 0.0;
  std::size_t correspondences = 0;
  Trajectory trajectory;
  bool succeeded = false;
  std::optional<ErrorCode> failure_code;
  std::string failure_reason;
};

// Correspondence matching

struct MatchInput {
  const Observation& now;
  const SubgoalPrediction& goal;
  std::string_view object_id;
  const PointCloud& now_points;
  const PointCloud& goal_points;
};

/// Pairs indices into the object's current points (source) and subgoal points (target).
class CorrespondenceMatcher {
 public:
  virtual ~CorrespondenceMatcher() = default;
  virtual CorrespondenceSet match(const MatchInput& input) = 0;
};

/// Uses ground-truth object poses behind both images: points are paired when they sit at the same
/// place on the object's surface (nearest neighbor in object-local coordinates within `tolerance`).
class OracleMatcher final : public CorrespondenceMatcher {
 public:
  explicit OracleMatcher(std::shared_ptr<const OracleWorld> world, double tolerance = 0.004)
      : world_(std::move(world)), tolerance_(tolerance) {}
  CorrespondenceSet match(const MatchInput& input) override;

 private:
  std::shared_ptr<const OracleWorld> world_;
  double tolerance_;
};

/// Self-contained fallback: centroid + principal-axes pre-alignment (best of the four proper sign
/// flips by mean residual), then nearest neighbor.
class PrincipalAxesMatcher final : public CorrespondenceMatcher {
 public:
  CorrespondenceSet match(const MatchInput& input) override;
};

struct MatchResult {
  CorrespondenceSet correspondences;
  PointCloud now_points;
  PointCloud goal_points;
};

/// Current object points come from segmenting the current image; subgoal object points are the
/// label-1 points of the subgoal cloud.
MatchResult match_correspondences(const Observation& now, const SubgoalPrediction& goal, std::string_view object_id,
                                  SegmenterBackend& segmenter, CorrespondenceMatcher& matcher);

// Registration

struct RegistrationOptions {
  double trim_above_rmse = 0.005;
  double trim_fraction = 0.2;
};

struct Registration {
  RigidTransform transform;
  double rmse = 0.0;
  bool trimmed = false;
  std::size_t pairs_used = 0;
};

Registration estimate_goal_transform(const CorrespondenceSet& corr, const PointCloud& now_cloud,
                                     const PointCloud& goal_cloud, const RegistrationOptions& options = {});

// Grasps

struct GraspOptions {
  double max_width = kMaxGripperWidth;
  /// Half thickness of the cloud slice each candidate is centered on.
  double slice_half_width = 0.01;
  /// Added to the measured object width for the commanded opening, capped at max_width.
  double width_margin = 0.01;
  Vec3 up = Vec3::UnitZ();
};

std::vector<GraspPose> propose_grasps(const PointCloud& object_cloud, std::size_t max_k,
                                      const GraspOptions& options = {});

struct FilteredGrasp {
  GraspPose grasp;
  std::size_t index = 0;
};

FilteredGrasp filter_grasps(const std::vector<GraspPose>& grasps, const PointCloud& target_points, double threshold);

// Motion planning

struct PlannerConfig {
  double max_step = 0.02;
  double max_rotation_step_deg = 10.0;
  std::size_t via_attempts = 50;
  /// Via-points are drawn around the start/goal midpoint: +-spread horizontally, [0, lift] upward.
  double via_spread = 0.2;
  double via_lift = 0.3;
  double clearance_weight = 0.01;
  std::uint64_t seed = 0;
};

/// Collision model for one planning query. The gripper is a point probe that ignores the attached
/// object and any `touching` objects; the attached object follows the gripper rigidly from its
/// current scene pose at `start`.
struct PlanningScene {
  const SceneState& scene;
  std::optional<std::string> attached_object;
  std::vector<std::string> touching;
};

Trajectory interpolate_poses(const RigidTransform& a, const RigidTransform& b, const PlannerConfig& config = {});

Trajectory plan_trajectory(const RigidTransform& start, const RigidTransform& goal, const PlanningScene& world,
                           const PlannerConfig& config = {});

struct ScoredTrajectory {
  Trajectory trajectory;
  double length = 0.0;
  double min_clearance = 0.0;
  double cost = 0.0;
};

struct OptimizedPlan {
  Trajectory trajectory;
  std::size_t chosen = 0;
  std::vector<ScoredTrajectory> candidates;
};

/// Collects up to `candidates` collision-free paths from the same seeded stream as plan_trajectory
/// and returns the cheapest: length + clearance_weight / (min clearance over interior waypoints).
OptimizedPlan plan_trajectory_optimized(const RigidTransform& start, const RigidTransform& goal,
                                        const PlanningScene& world, std::size_t candidates,
                                        const PlannerConfig& config = {});

/// Collision test for one gripper pose, as the planner sees it.
bool pose_in_collision(const RigidTransform& gripper, const PlanningScene& world, const RigidTransform& start);

double trajectory_cost(const Trajectory& t, const PlanningScene& world, double clearance_weight,
                       double* min_clearance = nullptr);

// Execution

struct ExecutionConfig {
  double grasp_threshold = 0.05;
  std::size_t max_grasps = 10;
  double pregrasp_height = 0.10;
  /// Release pose is raised in small steps up to this height when the estimated goal rests in contact.
  double release_lift_limit = 0.005;
  std::size_t trajectory_candidates = 1;
  PlannerConfig planner;
  GraspOptions grasp;
  RegistrationOptions registration;
};

/// Top-down gripper pose at `p`.
RigidTransform top_down_pose(const Vec3& p, const Vec3& up = Vec3::UnitZ());

struct ExecutionResult {
  ActionRecord record;
  SceneState scene;
  RigidTransform gripper;
};

/// Never throws for stage failures: they land in the record and the input scene comes back unchanged.
ExecutionResult execute_subtask(const Observation& now, const SubgoalPrediction& goal, const SceneState& scene,
                                std::string_view object_id, std::size_t subtask_index, const RigidTransform& gripper,
                                SegmenterBackend& segmenter, CorrespondenceMatcher& matcher,
                                const ExecutionConfig& config = {});

// Serialization

nlohmann::json to_json(const GraspPose& g);
nlohmann::json to_json(const Trajectory& t);
nlohmann::json to_json(const ActionRecord& r);

/// Header: index,qw,qx,qy,qz,tx,ty,tz,gripper
void write_trajectory_csv(std::ostream& out, const Trajectory& t);

}  // namespace w4o
