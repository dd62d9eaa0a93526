#include "w4o/policy.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>

#include "w4o/kdtree.hpp"
#include "w4o/oracle.hpp"
#include "w4o/random.hpp"

namespace w4o {

namespace {

constexpr double kDeg = 3.14159265358979323846 / 180.0;

std::vector<Vec3> gather(const PointCloud& cloud, const CorrespondenceSet& corr, bool source) {
  std::vector<Vec3> out;
  out.reserve(corr.size());
  for (const auto& [s, t] : corr.pairs) out.push_back(cloud.points[source ? s : t]);
  return out;
}

// Principal axes as columns, largest variance last.
Mat3 principal_axes(const std::vector<Vec3>& pts, const Vec3& c) {
  Mat3 cov = Mat3::Zero();
  for (const auto& p : pts) cov += (p - c) * (p - c).transpose();
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  Mat3 axes = es.eigenvectors();
  if (axes.determinant() < 0) axes.col(0) = -axes.col(0);
  return axes;
}

}  // namespace

void GraspPose::validate() const {
  if (!(width > 0) || !std::isfinite(width)) throw Error(ErrorCode::InvalidArgument, "grasp width must be > 0");
  if (!std::isfinite(score)) throw Error(ErrorCode::InvalidArgument, "grasp score must be finite");
  if (!pose.is_valid()) throw Error(ErrorCode::InvalidArgument, "grasp pose is not a rigid transform");
}

std::string_view to_string(GripperCommand c) {
  switch (c) {
    case GripperCommand::Open: return "open";
    case GripperCommand::Close: return "close";
    case GripperCommand::Hold: return "hold";
  }
  return "hold";
}

double Trajectory::length() const {
  double total = 0.0;
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    total += (waypoints[i].translation - waypoints[i - 1].translation).norm();
  }
  return total;
}

void Trajectory::validate(double max_step) const {
  if (waypoints.empty()) throw Error(ErrorCode::InvalidArgument, "trajectory has no waypoints");
  if (gripper_commands.size() != waypoints.size()) {
    throw Error(ErrorCode::DimensionMismatch, "one gripper command per waypoint");
  }
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    if ((waypoints[i].translation - waypoints[i - 1].translation).norm() > max_step + 1e-12) {
      throw Error(ErrorCode::InvalidArgument, "waypoint gap exceeds step at index " + std::to_string(i));
    }
  }
}

// ---------------------------------------------------------------------------
// Matching

CorrespondenceSet OracleMatcher::match(const MatchInput& in) {
  const auto now_scene = world_->scene_for(in.now.image);
  const auto goal_scene = world_->scene_for(in.goal.image);
  if (!now_scene || !goal_scene) throw Error(ErrorCode::BackendFailure, "oracle matcher: image not from the oracle world");
  const SceneObject* now_obj = now_scene->find(in.object_id);
  const SceneObject* goal_obj = goal_scene->find(in.object_id);
  if (!now_obj || !goal_obj) throw Error(ErrorCode::ObjectMissing, "'" + std::string(in.object_id) + "' not in scene");

  const RigidTransform to_now_local = invert(now_obj->pose);
  const RigidTransform to_goal_local = invert(goal_obj->pose);
  std::vector<Vec3> goal_local;
  goal_local.reserve(in.goal_points.size());
  for (const auto& q : in.goal_points.points) goal_local.push_back(to_goal_local * q);
  const KdTree tree(goal_local);

  CorrespondenceSet out;
  for (std::size_t i = 0; i < in.now_points.size(); ++i) {
    const auto hit = tree.nearest(to_now_local * in.now_points.points[i]);
    if (hit.distance <= tolerance_) out.pairs.emplace_back(i, hit.index);
  }
  return out;
}

CorrespondenceSet PrincipalAxesMatcher::match(const MatchInput& in) {
  const auto& src = in.now_points.points;
  const auto& dst = in.goal_points.points;
  CorrespondenceSet out;
  if (src.empty() || dst.empty()) return out;
  const Vec3 cs = in.now_points.centroid();
  const Vec3 cd = in.goal_points.centroid();
  const Mat3 as = principal_axes(src, cs);
  const Mat3 ad = principal_axes(dst, cd);
  const KdTree tree(dst);

  // Proper sign flips only: an even number of axes negated.
  const double flips[4][3] = {{1, 1, 1}, {-1, -1, 1}, {-1, 1, -1}, {1, -1, -1}};
  double best_err = std::numeric_limits<double>::infinity();
  Mat3 best_r = Mat3::Identity();
  for (const auto& f : flips) {
    const Mat3 r = ad * Vec3(f[0], f[1], f[2]).asDiagonal() * as.transpose();
    double err = 0.0;
    for (const auto& p : src) err += tree.nearest(cd + r * (p - cs)).distance;
    if (err < best_err) {
      best_err = err;
      best_r = r;
    }
  }
  for (std::size_t i = 0; i < src.size(); ++i) {
    out.pairs.emplace_back(i, tree.nearest(cd + best_r * (src[i] - cs)).index);
  }
  return out;
}

MatchResult match_correspondences(const Observation& now, const SubgoalPrediction& goal, std::string_view object_id,
                                  SegmenterBackend& segmenter, CorrespondenceMatcher& matcher) {
  MatchResult out;
  PixelMask now_mask;
  try {
    now_mask = segment_object(now.image, object_id, segmenter);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ObjectNotFound) {
      throw Error(ErrorCode::ObjectMissing, "'" + std::string(object_id) + "' missing from the current view");
    }
    throw;
  }
  out.now_points = back_project(now.depth, now.camera, &now_mask);

  if (goal.cloud.labels) {
    const auto& labels = *goal.cloud.labels;
    for (std::size_t i = 0; i < goal.cloud.size(); ++i) {
      if (labels[i] == 1) out.goal_points.points.push_back(goal.cloud.points[i]);
    }
  }
  if (out.now_points.empty() || goal.object_mask.count() == 0 || out.goal_points.empty()) {
    throw Error(ErrorCode::ObjectMissing, "'" + std::string(object_id) + "' missing from the " +
                                              (out.now_points.empty() ? "current view" : "subgoal"));
  }

  out.correspondences = matcher.match({now, goal, object_id, out.now_points, out.goal_points});
  out.correspondences.validate(out.now_points.size(), out.goal_points.size());
  if (out.correspondences.size() < 3) {
    throw Error(ErrorCode::TooFewMatches, std::to_string(out.correspondences.size()) + " correspondences (need 3)");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Registration

Registration estimate_goal_transform(const CorrespondenceSet& corr, const PointCloud& now_cloud,
                                     const PointCloud& goal_cloud, const RegistrationOptions& options) {
  corr.validate(now_cloud.size(), goal_cloud.size());
  if (corr.size() < 3) throw Error(ErrorCode::TooFewPoints, "registration needs at least 3 correspondences");
  std::vector<Vec3> src = gather(now_cloud, corr, true);
  std::vector<Vec3> dst = gather(goal_cloud, corr, false);
  std::vector<double> weights;
  if (corr.weights) weights = *corr.weights;

  Alignment fit = umeyama_align(src, dst, false, weights);
  Registration out{fit.transform, fit.rmse, false, src.size()};
  if (fit.rmse <= options.trim_above_rmse) return out;

  const std::size_t drop = static_cast<std::size_t>(std::floor(options.trim_fraction * static_cast<double>(src.size())));
  const std::size_t keep = src.size() - drop;
  if (drop == 0 || keep < 3) return out;

  std::vector<double> residual(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) residual[i] = (fit.transform * src[i] - dst[i]).squaredNorm();
  std::vector<std::size_t> order(src.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return residual[a] < residual[b]; });
  order.resize(keep);
  std::sort(order.begin(), order.end());

  std::vector<Vec3> ts, td;
  std::vector<double> tw;
  for (auto i : order) {
    ts.push_back(src[i]);
    td.push_back(dst[i]);
    if (!weights.empty()) tw.push_back(weights[i]);
  }
  fit = umeyama_align(ts, td, false, tw);
  return {fit.transform, fit.rmse, true, keep};
}

// ---------------------------------------------------------------------------
// Grasps

RigidTransform top_down_pose(const Vec3& p, const Vec3& up) {
  const Vec3 z = -up.normalized();
  Vec3 x = Vec3::UnitX() - z * z.x();
  if (x.norm() < 1e-6) x = Vec3::UnitY() - z * z.y();
  x.normalize();
  Mat3 r;
  r.col(0) = x;
  r.col(1) = z.cross(x);
  r.col(2) = z;
  return {r, p};
}

std::vector<GraspPose> propose_grasps(const PointCloud& object_cloud, std::size_t max_k, const GraspOptions& options) {
  if (object_cloud.empty()) throw Error(ErrorCode::EmptyCloud, "no object points to grasp");
  if (max_k == 0) throw Error(ErrorCode::InvalidArgument, "max_k must be >= 1");
  const auto& pts = object_cloud.points;
  const Vec3 up = options.up.normalized();
  const Vec3 c = object_cloud.centroid();
  const Mat3 axes = principal_axes(pts, c);

  // Slice axis: horizontal part of the longest principal axis, falling back when it stands upright.
  Vec3 slice_axis = Vec3::Zero();
  for (int k = 2; k >= 0 && slice_axis.norm() < 0.2; --k) {
    slice_axis = axes.col(k) - up * up.dot(axes.col(k));
  }
  if (slice_axis.norm() < 0.2) slice_axis = Vec3::UnitX() - up * up.x();
  slice_axis.normalize();
  const Vec3 closing = up.cross(slice_axis).normalized();
  const Vec3 approach = -up;

  double tmin = std::numeric_limits<double>::infinity();
  double tmax = -tmin;
  double radius = 0.0;
  for (const auto& p : pts) {
    const double t = slice_axis.dot(p);
    tmin = std::min(tmin, t);
    tmax = std::max(tmax, t);
    radius = std::max(radius, (p - c).norm());
  }
  const double mid = 0.5 * (tmin + tmax);
  const double quarter = 0.25 * (tmax - tmin);

  std::vector<GraspPose> out;
  for (std::size_t i = 0; i < max_k; ++i) {
    const double tc = max_k == 1 ? mid : mid - quarter + 2.0 * quarter * static_cast<double>(i) / (max_k - 1);
    double bmin = std::numeric_limits<double>::infinity(), bmax = -bmin;
    double hmin = bmin, hmax = -bmin;
    std::size_t n = 0;
    for (const auto& p : pts) {
      if (std::abs(slice_axis.dot(p) - tc) > options.slice_half_width) continue;
      const double b = closing.dot(p);
      const double h = up.dot(p);
      bmin = std::min(bmin, b);
      bmax = std::max(bmax, b);
      hmin = std::min(hmin, h);
      hmax = std::max(hmax, h);
      ++n;
    }
    if (n < 3) continue;
    const double extent = bmax - bmin;
    if (extent > options.max_width) continue;

    const Vec3 center = slice_axis * tc + closing * (0.5 * (bmin + bmax)) + up * (0.5 * (hmin + hmax));
    Mat3 r;
    r.col(0) = closing;
    r.col(1) = approach.cross(closing);
    r.col(2) = approach;
    GraspPose g;
    g.pose = {r, center};
    g.width = std::min(options.max_width, extent + options.width_margin);
    const double dist = radius > 0 ? std::min(1.0, (center - c).norm() / radius) : 0.0;
    g.score = 0.5 * (1.0 - dist) + 0.5 * std::abs(approach.dot(-up));
    out.push_back(g);
  }
  if (out.empty()) throw Error(ErrorCode::NoCandidates, "object is wider than the gripper at every slice");
  std::stable_sort(out.begin(), out.end(), [](const GraspPose& a, const GraspPose& b) { return a.score > b.score; });
  return out;
}

FilteredGrasp filter_grasps(const std::vector<GraspPose>& grasps, const PointCloud& target_points, double threshold) {
  if (grasps.empty()) throw Error(ErrorCode::InvalidArgument, "no grasps to filter");
  if (target_points.empty()) throw Error(ErrorCode::EmptyCloud, "no target points");
  const KdTree tree(target_points.points);
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < grasps.size(); ++i) {
    if (!(tree.nearest(grasps[i].center()).distance <= threshold)) continue;
    if (!best || grasps[i].score > grasps[*best].score) best = i;
  }
  if (!best) throw Error(ErrorCode::NoFeasibleGrasp, "no grasp within " + std::to_string(threshold) + " m of the object");
  return {grasps[*best], *best};
}

// ---------------------------------------------------------------------------
// Motion planning

namespace {

struct Checker {
  const PlanningScene& world;
  std::vector<std::string> ignore;
  const SceneObject* attached = nullptr;
  RigidTransform grip_to_object;

  Checker(const PlanningScene& w, const RigidTransform& start) : world(w), ignore(w.touching) {
    if (w.attached_object) {
      attached = &w.scene.object(*w.attached_object);
      grip_to_object = invert(start) * attached->pose;
      ignore.push_back(*w.attached_object);
    }
  }

  bool collides(const RigidTransform& g) const {
    if (point_in_collision(world.scene, g.translation, ignore)) return true;
    return attached && check_collision(world.scene, attached->id, g * grip_to_object);
  }

  double clearance_at(const RigidTransform& g) const {
    double c = point_clearance(world.scene, g.translation, ignore);
    if (attached) c = std::min(c, std::max(0.0, clearance(world.scene, attached->id, g * grip_to_object)));
    return c;
  }

  bool free(const Trajectory& t) const {
    return std::none_of(t.waypoints.begin(), t.waypoints.end(), [&](const auto& w) { return collides(w); });
  }
};

RigidTransform slerp_pose(const RigidTransform& a, const RigidTransform& b, double s) {
  const Eigen::Quaterniond qa(a.rotation), qb(b.rotation);
  return {qa.slerp(s, qb).toRotationMatrix(), (1.0 - s) * a.translation + s * b.translation};
}

Trajectory join(Trajectory a, const Trajectory& b) {
  a.waypoints.insert(a.waypoints.end(), b.waypoints.begin() + 1, b.waypoints.end());
  a.gripper_commands.insert(a.gripper_commands.end(), b.gripper_commands.begin() + 1, b.gripper_commands.end());
  return a;
}

// Straight path first, then via-point detours from a seeded stream. Shared by both planners so
// that a one-candidate optimized plan is the plain plan.
class CandidateStream {
 public:
  CandidateStream(const RigidTransform& start, const RigidTransform& goal, const Checker& checker,
                  const PlannerConfig& config, std::size_t budget)
      : start_(start), goal_(goal), checker_(checker), config_(config), budget_(budget),
        rng_(derive_seed("via-points", config.seed)) {}

  std::optional<Trajectory> next() {
    if (!straight_done_) {
      straight_done_ = true;
      Trajectory t = interpolate_poses(start_, goal_, config_);
      if (checker_.free(t)) return t;
    }
    const Vec3 up = checker_.world.scene.gravity_axis.normalized();
    Vec3 h1 = up.unitOrthogonal();
    Vec3 h2 = up.cross(h1);
    const Vec3 mid = 0.5 * (start_.translation + goal_.translation);
    while (attempts_ < budget_) {
      ++attempts_;
      const double a = rng_.uniform(-config_.via_spread, config_.via_spread);
      const double b = rng_.uniform(-config_.via_spread, config_.via_spread);
      const double c = rng_.uniform(0.0, config_.via_lift);
      RigidTransform via = slerp_pose(start_, goal_, 0.5);
      via.translation = mid + a * h1 + b * h2 + c * up;
      if (checker_.collides(via)) continue;
      Trajectory first = interpolate_poses(start_, via, config_);
      if (!checker_.free(first)) continue;
      Trajectory second = interpolate_poses(via, goal_, config_);
      if (!checker_.free(second)) continue;
      return join(std::move(first), second);
    }
    return std::nullopt;
  }

 private:
  RigidTransform start_, goal_;
  const Checker& checker_;
  PlannerConfig config_;
  std::size_t budget_;
  std::size_t attempts_ = 0;
  bool straight_done_ = false;
  Rng rng_;
};

void check_endpoints(const RigidTransform& start, const RigidTransform& goal, const Checker& checker) {
  if (!start.is_valid(1e-6) || !goal.is_valid(1e-6)) throw Error(ErrorCode::InvalidArgument, "invalid pose");
  if (checker.collides(start)) throw Error(ErrorCode::PlanningFailure, "start pose is in collision");
  if (checker.collides(goal)) throw Error(ErrorCode::GoalInCollision, "goal pose is in collision");
}

}  // namespace

Trajectory interpolate_poses(const RigidTransform& a, const RigidTransform& b, const PlannerConfig& config) {
  const double d = (b.translation - a.translation).norm();
  const double angle = rotation_angle(a.rotation.transpose() * b.rotation);
  const double by_dist = std::ceil(d / config.max_step - 1e-9);
  const double by_angle = std::ceil(angle / (config.max_rotation_step_deg * kDeg) - 1e-9);
  const auto n = static_cast<std::size_t>(std::max({0.0, by_dist, by_angle}));
  Trajectory t;
  t.waypoints.push_back(a);
  for (std::size_t i = 1; i < n; ++i) t.waypoints.push_back(slerp_pose(a, b, static_cast<double>(i) / n));
  if (n > 0) t.waypoints.push_back(b);
  t.gripper_commands.assign(t.waypoints.size(), GripperCommand::Hold);
  return t;
}

bool pose_in_collision(const RigidTransform& gripper, const PlanningScene& world, const RigidTransform& start) {
  return Checker(world, start).collides(gripper);
}

double trajectory_cost(const Trajectory& t, const PlanningScene& world, double clearance_weight,
                       double* min_clearance) {
  if (t.waypoints.empty()) throw Error(ErrorCode::InvalidArgument, "empty trajectory");
  const Checker checker(world, t.waypoints.front());
  double clear = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < t.waypoints.size(); ++i) clear = std::min(clear, checker.clearance_at(t.waypoints[i]));
  if (min_clearance) *min_clearance = clear;
  const double penalty = std::isinf(clear) ? 0.0 : clearance_weight / std::max(clear, 1e-9);
  return t.length() + penalty;
}

Trajectory plan_trajectory(const RigidTransform& start, const RigidTransform& goal, const PlanningScene& world,
                           const PlannerConfig& config) {
  const Checker checker(world, start);
  check_endpoints(start, goal, checker);
  CandidateStream stream(start, goal, checker, config, config.via_attempts);
  auto t = stream.next();
  if (!t) throw Error(ErrorCode::PlanningFailure, "no collision-free path within " +
                                                      std::to_string(config.via_attempts) + " via-points");
  return *t;
}

OptimizedPlan plan_trajectory_optimized(const RigidTransform& start, const RigidTransform& goal,
                                        const PlanningScene& world, std::size_t candidates,
                                        const PlannerConfig& config) {
  if (candidates == 0) throw Error(ErrorCode::InvalidArgument, "candidates must be >= 1");
  const Checker checker(world, start);
  check_endpoints(start, goal, checker);
  CandidateStream stream(start, goal, checker, config, config.via_attempts * candidates);
  OptimizedPlan out;
  while (out.candidates.size() < candidates) {
    auto t = stream.next();
    if (!t) break;
    ScoredTrajectory s;
    s.cost = trajectory_cost(*t, world, config.clearance_weight, &s.min_clearance);
    s.length = t->length();
    s.trajectory = std::move(*t);
    out.candidates.push_back(std::move(s));
  }
  if (out.candidates.empty()) throw Error(ErrorCode::PlanningFailure, "no collision-free candidate path");
  for (std::size_t i = 1; i < out.candidates.size(); ++i) {
    if (out.candidates[i].cost < out.candidates[out.chosen].cost) out.chosen = i;
  }
  out.trajectory = out.candidates[out.chosen].trajectory;
  return out;
}

// ---------------------------------------------------------------------------
// Execution

ExecutionResult execute_subtask(const Observation& now, const SubgoalPrediction& goal, const SceneState& scene,
                                std::string_view object_id, std::size_t subtask_index, const RigidTransform& gripper,
                                SegmenterBackend& segmenter, CorrespondenceMatcher& matcher,
                                const ExecutionConfig& config) {
  ExecutionResult out{{}, scene, gripper};
  ActionRecord& rec = out.record;
  rec.subtask_index = subtask_index;
  const std::string id(object_id);

  auto plan = [&](const RigidTransform& a, const RigidTransform& b, const PlanningScene& world) {
    if (config.trajectory_candidates <= 1) return plan_trajectory(a, b, world, config.planner);
    return plan_trajectory_optimized(a, b, world, config.trajectory_candidates, config.planner).trajectory;
  };

  try {
    const MatchResult m = match_correspondences(now, goal, object_id, segmenter, matcher);
    rec.correspondences = m.correspondences.size();
    const Registration reg = estimate_goal_transform(m.correspondences, m.now_points, m.goal_points,
                                                     config.registration);
    rec.goal_transform = reg.transform;
    rec.registration_rmse = reg.rmse;

    PointCloud matched;
    for (const auto& [s, t] : m.correspondences.pairs) matched.points.push_back(m.now_points.points[s]);
    const auto grasps = propose_grasps(m.now_points, config.max_grasps, config.grasp);
    const FilteredGrasp chosen = filter_grasps(grasps, matched, config.grasp_threshold);
    rec.grasp = chosen.grasp;

    const SceneObject& obj = scene.object(object_id);
    const Vec3 up = scene.gravity_axis.normalized();
    const RigidTransform grasp = chosen.grasp.pose;

    // Object motion T carries the gripper along rigidly. A goal resting in contact may sit a hair
    // inside its support after estimation error; lift it clear in small steps.
    RigidTransform motion = reg.transform;
    for (double lift = 0.0; check_collision(scene, id, motion * obj.pose); lift += 0.0005) {
      if (lift > config.release_lift_limit + 1e-12) {
        throw Error(ErrorCode::GoalInCollision, "estimated goal pose of '" + id + "' is in collision");
      }
      motion = RigidTransform::from_translation(up * 0.0005) * motion;
    }
    const RigidTransform release = motion * grasp;
    const RigidTransform pregrasp = RigidTransform::from_translation(up * config.pregrasp_height) * grasp;

    const PlanningScene free_space{scene, std::nullopt, {id}};
    const PlanningScene carrying{scene, id, {}};
    Trajectory approach = plan(gripper, pregrasp, free_space);
    Trajectory descend = plan(pregrasp, grasp, free_space);
    Trajectory transport = plan(grasp, release, carrying);

    std::fill(approach.gripper_commands.begin(), approach.gripper_commands.end(), GripperCommand::Open);
    std::fill(descend.gripper_commands.begin(), descend.gripper_commands.end(), GripperCommand::Open);
    descend.gripper_commands.back() = GripperCommand::Close;
    transport.gripper_commands.back() = GripperCommand::Open;
    Trajectory full = join(join(std::move(approach), descend), transport);
    full.validate(config.planner.max_step);

    out.scene = apply_object_motion(scene, object_id, motion);
    out.gripper = release;
    rec.trajectory = std::move(full);
    rec.succeeded = true;
  } catch (const Error& e) {
    rec.succeeded = false;
    rec.failure_code = e.code();
    rec.failure_reason = e.what();
    out.scene = scene;
    out.gripper = gripper;
  } catch (const std::exception& e) {
    rec.succeeded = false;
    rec.failure_code = ErrorCode::BackendFailure;
    rec.failure_reason = e.what();
    out.scene = scene;
    out.gripper = gripper;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

using nlohmann::json;

json to_json(const GraspPose& g) { return {{"pose", pose_to_json(g.pose)}, {"width", g.width}, {"score", g.score}}; }

json to_json(const Trajectory& t) {
  json wps = json::array();
  json cmds = json::array();
  for (std::size_t i = 0; i < t.waypoints.size(); ++i) {
    wps.push_back(pose_to_json(t.waypoints[i]));
    cmds.push_back(std::string(to_string(t.gripper_commands[i])));
  }
  return {{"waypoints", wps}, {"gripper_commands", cmds}};
}

json to_json(const ActionRecord& r) {
  json j;
  j["subtask_index"] = r.subtask_index;
  j["outcome"] = r.succeeded ? "succeeded" : "failed";
  if (!r.succeeded) {
    j["failure_code"] = r.failure_code ? std::string(to_string(*r.failure_code)) : std::string("Unknown");
    j["reason"] = r.failure_reason;
  }
  j["grasp"] = r.grasp ? to_json(*r.grasp) : json(nullptr);
  j["goal_transform"] = r.goal_transform ? pose_to_json(*r.goal_transform) : json(nullptr);
  j["registration_rmse"] = r.registration_rmse;
  j["correspondences"] = r.correspondences;
  j["trajectory"] = to_json(r.trajectory);
  return j;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& t) {
  out << "index,qw,qx,qy,qz,tx,ty,tz,gripper\n";
  const auto old_precision = out.precision(12);
  for (std::size_t i = 0; i < t.waypoints.size(); ++i) {
    const auto q = t.waypoints[i].quaternion();
    const Vec3& p = t.waypoints[i].translation;
    out << i << ',' << q.w() << ',' << q.x() << ',' << q.y() << ',' << q.z() << ',' << p.x() << ',' << p.y() << ','
        << p.z() << ',' << to_string(t.gripper_commands[i]) << '\n';
  }
  out.precision(old_precision);
}

}  // namespace w4o
