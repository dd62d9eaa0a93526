#include "w4o/scene.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <regex>
#include <set>

#include "w4o/error.hpp"
#include "w4o/random.hpp"

namespace w4o {

const SceneObject* SceneState::find(std::string_view id) const {
  for (const auto& o : objects) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

const SceneObject& SceneState::object(std::string_view id) const {
  if (const auto* o = find(id)) return *o;
  throw Error(ErrorCode::UnknownObject, "no object named '" + std::string(id) + "'");
}

std::uint16_t SceneState::label_of(std::string_view id) const {
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (objects[i].id == id) return static_cast<std::uint16_t>(i + 1);
  }
  throw Error(ErrorCode::UnknownObject, "no object named '" + std::string(id) + "'");
}

void SceneState::validate() const {
  std::set<std::string> ids;
  for (const auto& o : objects) {
    if (o.id.empty()) throw Error(ErrorCode::InvalidArgument, "object id must be non-empty");
    if (!ids.insert(o.id).second) throw Error(ErrorCode::InvalidArgument, "duplicate object id '" + o.id + "'");
    o.shape.validate();
    if (!o.pose.is_valid()) throw Error(ErrorCode::InvalidArgument, "object '" + o.id + "' has an invalid pose");
  }
  if (std::abs(gravity_axis.norm() - 1.0) > 1e-9) throw Error(ErrorCode::InvalidArgument, "gravity_axis must be unit");
}

double bottom_height(const SceneState& scene, const SceneObject& obj, const RigidTransform& pose) {
  return scene.gravity_axis.dot(obj.posed_at(pose).support(-scene.gravity_axis));
}

double top_height(const SceneState& scene, const SceneObject& obj, const RigidTransform& pose) {
  return scene.gravity_axis.dot(obj.posed_at(pose).support(scene.gravity_axis));
}

// ---------------------------------------------------------------------------
// Templates and layout sampling

const std::vector<TaskTemplate>& task_templates() {
  static const std::vector<TaskTemplate> templates{
      {"pick-place", "Put the tomato in the pan", "tomato", "pan"},
      {"take-off-rack", "Take the plate off the rack", "plate", "rack"},
  };
  return templates;
}

const TaskTemplate& find_template(std::string_view name) {
  for (const auto& t : task_templates()) {
    if (t.name == name) return t;
  }
  throw Error(ErrorCode::UnknownTemplate, "unknown scene template '" + std::string(name) + "'");
}

namespace {

double footprint_radius(const Shape& s) {
  switch (s.kind) {
    case ShapeKind::Box: return std::hypot(s.half_extents.x(), s.half_extents.y());
    case ShapeKind::Sphere:
    case ShapeKind::Cylinder: return s.radius;
  }
  return 0.0;
}

double resting_offset(const Shape& s) {
  switch (s.kind) {
    case ShapeKind::Box: return s.half_extents.z();
    case ShapeKind::Sphere: return s.radius;
    case ShapeKind::Cylinder: return s.half_height;
  }
  return 0.0;
}

SceneObject upright(std::string id, Shape shape, Rgb color, double x, double y, double base, double yaw) {
  SceneObject o{std::move(id), shape, {}, color};
  o.pose = RigidTransform::about_axis(Vec3::UnitZ(), yaw, Vec3(x, y, base + resting_offset(shape)));
  return o;
}

double horizontal_gap(const SceneObject& a, const SceneObject& b) {
  const Vec3 d = a.pose.translation - b.pose.translation;
  return std::hypot(d.x(), d.y()) - footprint_radius(a.shape) - footprint_radius(b.shape);
}

bool within_table(const SceneState& scene, const SceneObject& o, const RigidTransform& pose, double margin) {
  if (!scene.table) return true;
  const double r = footprint_radius(o.shape);
  return std::abs(pose.translation.x()) + r + margin <= scene.table->size_x / 2 &&
         std::abs(pose.translation.y()) + r + margin <= scene.table->size_y / 2;
}

bool layout_is_clean(const SceneState& scene) {
  for (const auto& o : scene.objects) {
    if (check_collision(scene, o.id, o.pose)) return false;
    if (!within_table(scene, o, o.pose, 0.0)) return false;
  }
  return true;
}

// Every intermediate pose of the scripted task must be collision-free and on the table.
bool task_is_reachable(const SceneState& scene, std::string_view template_name) {
  const auto& tpl = find_template(template_name);
  SceneState s = scene;
  for (const auto& subtask : decompose_task(tpl.default_task).subtasks) {
    s = oracle_future_scene(s, subtask);
    const auto& moved = s.object(tpl.moved_object);
    if (check_collision(s, moved.id, moved.pose)) return false;
    if (!within_table(s, moved, moved.pose, 0.02)) return false;
  }
  return true;
}

// Draws are bound to named locals so their order does not depend on argument evaluation order.
SceneState sample_pick_place(Rng& rng, const SceneState& base) {
  const double table_h = base.table->height;
  const double hx = base.table->size_x / 2 - 0.06;
  const double hy = base.table->size_y / 2 - 0.06;
  const double tomato_x = rng.uniform(-hx, hx);
  const double tomato_y = rng.uniform(-hy, hy);
  const double pan_x = rng.uniform(-hx + 0.04, hx - 0.04);
  const double pan_y = rng.uniform(-hy + 0.04, hy - 0.04);
  const double block_x = rng.uniform(-hx, hx);
  const double block_y = rng.uniform(-hy, hy);
  const double block_yaw = rng.uniform(0.0, std::numbers::pi / 2);

  SceneState s = base;
  s.objects.push_back(upright("tomato", Shape::sphere(0.03), {220, 40, 30}, tomato_x, tomato_y, table_h, 0.0));
  s.objects.push_back(upright("pan", Shape::cylinder(0.08, 0.03), {70, 70, 80}, pan_x, pan_y, table_h, 0.0));
  s.objects.push_back(
      upright("block", Shape::box(0.05, 0.05, 0.05), {40, 60, 200}, block_x, block_y, table_h, block_yaw));
  const auto& tomato = s.objects[0];
  const auto& pan = s.objects[1];
  const auto& block = s.objects[2];
  const bool spaced = horizontal_gap(tomato, pan) >= 0.08 && horizontal_gap(tomato, block) >= 0.04 &&
                      horizontal_gap(pan, block) >= 0.04;
  if (!spaced) s.objects.clear();
  return s;
}

SceneState sample_take_off_rack(Rng& rng, const SceneState& base) {
  const double table_h = base.table->height;
  const double hx = base.table->size_x / 2 - 0.12;
  const double hy = base.table->size_y / 2 - 0.12;
  const double rack_x = rng.uniform(-hx, hx);
  const double rack_y = rng.uniform(-hy, hy);
  const double rack_yaw = rng.uniform(-0.3, 0.3);
  const double plate_dx = rng.uniform(-0.02, 0.02);
  const double plate_dy = rng.uniform(-0.02, 0.02);
  const double cup_x = rng.uniform(-hx, hx);
  const double cup_y = rng.uniform(-hy, hy);

  const Shape rack_shape = Shape::box(0.14, 0.14, 0.08);
  SceneState s = base;
  s.objects.push_back(upright("plate", Shape::cylinder(0.035, 0.012), {230, 230, 225}, rack_x + plate_dx,
                              rack_y + plate_dy, table_h + 2 * rack_shape.half_extents.z(), 0.0));
  s.objects.push_back(upright("rack", rack_shape, {120, 80, 40}, rack_x, rack_y, table_h, rack_yaw));
  s.objects.push_back(upright("cup", Shape::cylinder(0.03, 0.08), {40, 160, 70}, cup_x, cup_y, table_h, 0.0));
  if (horizontal_gap(s.objects[1], s.objects[2]) < 0.04) s.objects.clear();
  return s;
}

}  // namespace

SceneState sample_layout(std::string_view template_name, std::uint64_t seed) {
  const auto& tpl = find_template(template_name);
  SceneState base;
  base.table = TableSlab{};
  Rng rng(derive_seed(tpl.name, seed));
  for (int attempt = 0; attempt < 1000; ++attempt) {
    SceneState s = tpl.name == "pick-place" ? sample_pick_place(rng, base) : sample_take_off_rack(rng, base);
    if (s.objects.empty() || !layout_is_clean(s)) continue;
    if (!task_is_reachable(s, tpl.name)) continue;
    return s;
  }
  throw Error(ErrorCode::PlacementFailure, "no valid layout for '" + tpl.name + "' within 1000 attempts");
}

CameraModel default_camera(const SceneState& scene) {
  const double h = scene.table ? scene.table->height : 0.0;
  return CameraModel::look_at(360.0, 360.0, 320, 240, Vec3(0.0, -0.75, h + 0.65), Vec3(0.0, 0.0, h), Vec3::UnitZ());
}

// ---------------------------------------------------------------------------
// Rendering

RenderedView render(const SceneState& scene, const CameraModel& cam) {
  cam.validate();
  RenderedView view{RgbImage(cam.width, cam.height, kBackgroundColor), DepthMap(cam.width, cam.height),
                    LabelImage(cam.width, cam.height)};

  struct Target {
    PosedShape posed;
    std::uint16_t label;
    Rgb color;
    double bound;
  };
  std::vector<Target> targets;
  std::optional<Shape> table_shape;
  if (scene.table) table_shape = scene.table->shape();
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const auto& o = scene.objects[i];
    targets.push_back({o.posed(), static_cast<std::uint16_t>(i + 1), o.color, o.shape.bounding_radius()});
  }
  if (table_shape) targets.push_back({{&*table_shape, scene.table->pose()}, 0, kTableColor, table_shape->bounding_radius()});

  const Vec3 origin = cam.pose.translation;
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const Vec3 dir = cam.pose.rotation * Vec3((u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0);
      const double dir2 = dir.squaredNorm();
      double best = std::numeric_limits<double>::infinity();
      const Target* hit = nullptr;
      for (const auto& t : targets) {
        // Bounding-sphere reject.
        const Vec3 oc = t.posed.pose.translation - origin;
        const double along = oc.dot(dir);
        if (oc.squaredNorm() - along * along / dir2 > t.bound * t.bound) continue;
        if (const auto lambda = t.posed.raycast(origin, dir); lambda && *lambda < best) {
          best = *lambda;
          hit = &t;
        }
      }
      if (!hit) continue;
      // dir has unit camera-z, so the ray parameter is the camera-frame depth.
      view.depth.set(u, v, best);
      view.seg.ids[view.depth.index(u, v)] = hit->label;
      view.image.set(u, v, hit->color);
    }
  }
  return view;
}

SceneState apply_object_motion(const SceneState& scene, std::string_view object_id, const RigidTransform& motion) {
  scene.object(object_id);
  SceneState out = scene;
  for (auto& o : out.objects) {
    if (o.id == object_id) o.pose = compose(motion, o.pose);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Subtask grammar and oracle semantics

namespace {

std::string normalize(std::string_view text) {
  std::string s;
  for (char c : text) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  while (!s.empty() && (std::isspace(static_cast<unsigned char>(s.back())) || s.back() == '.')) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && std::isspace(static_cast<unsigned char>(s[start]))) ++start;
  return s.substr(start);
}

}  // namespace

ParsedSubtask parse_subtask(std::string_view text) {
  static const std::regex head(R"(^(?:move|place|put)\s+the\s+([a-z0-9_\-]+)\b(.*)$)");
  static const std::regex over(R"(\b(?:above|over)\s+the\s+([a-z0-9_\-]+))");
  static const std::regex away(R"(\baway\s+from\s+the\s+([a-z0-9_\-]+))");
  static const std::regex place(R"(\b(?:into|onto|inside|in|on)\s+the\s+([a-z0-9_\-]+))");
  static const std::regex up(R"(\b(?:upward|upwards|up)\b)");
  static const std::regex down(R"(\b(?:downward|downwards|down)\b)");
  static const std::regex left(R"(\bleft\b)");
  static const std::regex right(R"(\bright\b)");
  static const std::regex forward(R"(\b(?:forward|forwards)\b)");
  static const std::regex backward(R"(\b(?:backward|backwards|back)\b)");

  const std::string s = normalize(text);
  std::smatch m;
  if (!std::regex_match(s, m, head)) {
    throw Error(ErrorCode::UnparsableSubtask, "cannot parse subtask '" + std::string(text) + "'");
  }
  ParsedSubtask out;
  out.object = m[1];
  const std::string rest = m[2];
  std::smatch r;
  if (std::regex_search(rest, r, over)) {
    out.kind = MotionKind::Over;
    out.reference = r[1];
  } else if (std::regex_search(rest, r, away)) {
    out.kind = MotionKind::AwayFrom;
    out.reference = r[1];
  } else if (std::regex_search(rest, r, place)) {
    out.kind = MotionKind::PlaceOn;
    out.reference = r[1];
  } else if (std::regex_search(rest, up)) {
    out.kind = MotionKind::Up;
  } else if (std::regex_search(rest, down)) {
    out.kind = MotionKind::Down;
  } else if (std::regex_search(rest, left)) {
    out.kind = MotionKind::Left;
  } else if (std::regex_search(rest, right)) {
    out.kind = MotionKind::Right;
  } else if (std::regex_search(rest, forward)) {
    out.kind = MotionKind::Forward;
  } else if (std::regex_search(rest, backward)) {
    out.kind = MotionKind::Backward;
  } else {
    throw Error(ErrorCode::UnparsableSubtask, "no recognized motion in '" + std::string(text) + "'");
  }
  return out;
}

TaskDecomposition decompose_task(std::string_view task) {
  static const std::regex put(
      R"(^(?:put|move|place)\s+the\s+([a-z0-9_\-]+)\s+(in|into|on|onto|inside)\s+the\s+([a-z0-9_\-]+)$)");
  static const std::regex take_off(R"(^take\s+the\s+([a-z0-9_\-]+)\s+off\s+(?:of\s+)?the\s+([a-z0-9_\-]+)$)");
  const std::string s = normalize(task);
  std::smatch m;
  TaskDecomposition out;
  if (std::regex_match(s, m, put)) {
    const std::string x = m[1];
    const std::string prep = (m[2] == "on" || m[2] == "onto") ? "onto" : "into";
    const std::string y = m[3];
    out.moved_object = x;
    out.subtasks = {"Move the " + x + " vertically upward",
                    "Move the " + x + " horizontally, positioning it above the " + y,
                    "Move the " + x + " downward " + prep + " the " + y};
  } else if (std::regex_match(s, m, take_off)) {
    const std::string x = m[1];
    const std::string y = m[2];
    out.moved_object = x;
    out.subtasks = {"Move the " + x + " vertically upward", "Move the " + x + " horizontally away from the " + y,
                    "Move the " + x + " downward onto the table"};
  } else {
    throw Error(ErrorCode::UnparsableSubtask, "no scripted decomposition for task '" + std::string(task) + "'");
  }
  return out;
}

SceneState oracle_future_scene(const SceneState& scene, std::string_view subtask) {
  const ParsedSubtask parsed = parse_subtask(subtask);
  const SceneObject& obj = scene.object(parsed.object);
  const Vec3& up = scene.gravity_axis;
  const Vec3 center = obj.pose.translation;
  auto horizontal = [&](const Vec3& v) { return Vec3(v - up * up.dot(v)); };

  // Horizontal directions: x is right, y is forward.
  Vec3 shift = Vec3::Zero();
  const double step = scene.params.horizontal_step;
  switch (parsed.kind) {
    case MotionKind::Up: shift = scene.params.lift_height * up; break;
    case MotionKind::Down: {
      double drop = scene.params.lift_height;
      if (scene.table) drop = std::min(drop, bottom_height(scene, obj, obj.pose) - scene.table->height);
      shift = -std::max(drop, 0.0) * up;
      break;
    }
    case MotionKind::Left: shift = horizontal(-step * Vec3::UnitX()); break;
    case MotionKind::Right: shift = horizontal(step * Vec3::UnitX()); break;
    case MotionKind::Forward: shift = horizontal(step * Vec3::UnitY()); break;
    case MotionKind::Backward: shift = horizontal(-step * Vec3::UnitY()); break;
    case MotionKind::Over: {
      const SceneObject& ref = scene.object(parsed.reference);
      shift = horizontal(ref.pose.translation - center);
      break;
    }
    case MotionKind::AwayFrom: {
      const SceneObject& ref = scene.object(parsed.reference);
      Vec3 dir = horizontal(-ref.pose.translation);  // toward the table center
      if (dir.norm() < 0.01) dir = horizontal(Vec3::UnitX());
      dir.normalize();
      const double reach = ref.shape.bounding_radius() + obj.shape.bounding_radius() + scene.params.away_clearance;
      const Vec3 goal = horizontal(ref.pose.translation) + reach * dir;
      shift = goal - horizontal(center);
      break;
    }
    case MotionKind::PlaceOn: {
      double support = 0.0;
      if (parsed.reference == "table") {
        if (!scene.table) throw Error(ErrorCode::UnknownObject, "scene has no table");
        support = scene.table->height;
      } else {
        const SceneObject& ref = scene.object(parsed.reference);
        support = top_height(scene, ref, ref.pose);
      }
      shift = (support - bottom_height(scene, obj, obj.pose)) * up;
      break;
    }
  }
  return apply_object_motion(scene, obj.id, RigidTransform::from_translation(shift));
}

// ---------------------------------------------------------------------------
// Collision queries

bool check_collision(const SceneState& scene, std::string_view object_id, const RigidTransform& candidate_pose) {
  const SceneObject& obj = scene.object(object_id);
  const PosedShape moving = obj.posed_at(candidate_pose);
  const double tol = scene.params.contact_tolerance;
  for (const auto& other : scene.objects) {
    if (other.id == obj.id) continue;
    if (penetrates(moving, other.posed(), tol)) return true;
  }
  if (scene.table) {
    const Shape table = scene.table->shape();
    if (penetrates(moving, {&table, scene.table->pose()}, tol)) return true;
  }
  return false;
}

double clearance(const SceneState& scene, std::string_view object_id, const RigidTransform& candidate_pose) {
  const SceneObject& obj = scene.object(object_id);
  const PosedShape moving = obj.posed_at(candidate_pose);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& other : scene.objects) {
    if (other.id == obj.id) continue;
    best = std::min(best, convex_distance(moving, other.posed()));
  }
  if (scene.table) {
    const Shape table = scene.table->shape();
    best = std::min(best, convex_distance(moving, {&table, scene.table->pose()}));
  }
  return best;
}

namespace {

bool ignored(const std::vector<std::string>& ignore, const std::string& id) {
  return std::find(ignore.begin(), ignore.end(), id) != ignore.end();
}

}  // namespace

bool point_in_collision(const SceneState& scene, const Vec3& p, const std::vector<std::string>& ignore) {
  const double depth = scene.params.contact_tolerance / 2;
  for (const auto& o : scene.objects) {
    if (!ignored(ignore, o.id) && o.posed().signed_distance(p) < -depth) return true;
  }
  if (scene.table) {
    const Shape table = scene.table->shape();
    if (PosedShape{&table, scene.table->pose()}.signed_distance(p) < -depth) return true;
  }
  return false;
}

double point_clearance(const SceneState& scene, const Vec3& p, const std::vector<std::string>& ignore) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& o : scene.objects) {
    if (!ignored(ignore, o.id)) best = std::min(best, std::max(0.0, o.posed().signed_distance(p)));
  }
  if (scene.table) {
    const Shape table = scene.table->shape();
    best = std::min(best, std::max(0.0, PosedShape{&table, scene.table->pose()}.signed_distance(p)));
  }
  return best;
}

// ---------------------------------------------------------------------------
// JSON

using nlohmann::json;

json pose_to_json(const RigidTransform& pose) {
  const auto q = pose.quaternion();
  return {{"rotation", {q.w(), q.x(), q.y(), q.z()}},
          {"translation", {pose.translation.x(), pose.translation.y(), pose.translation.z()}}};
}

RigidTransform pose_from_json(const json& j) {
  const auto& r = j.at("rotation");
  const auto& t = j.at("translation");
  if (r.size() != 4 || t.size() != 3) throw Error(ErrorCode::ConfigError, "pose needs rotation[4] and translation[3]");
  const Eigen::Quaterniond q(r[0].get<double>(), r[1].get<double>(), r[2].get<double>(), r[3].get<double>());
  if (std::abs(q.norm() - 1.0) > 1e-6) throw Error(ErrorCode::ConfigError, "rotation quaternion is not normalized");
  return RigidTransform::from_quaternion(q, Vec3(t[0].get<double>(), t[1].get<double>(), t[2].get<double>()));
}

json camera_to_json(const CameraModel& cam) {
  return {{"fx", cam.fx}, {"fy", cam.fy}, {"cx", cam.cx}, {"cy", cam.cy},
          {"width", cam.width}, {"height", cam.height}, {"pose", pose_to_json(cam.pose)}};
}

CameraModel camera_from_json(const json& j) {
  CameraModel cam;
  cam.fx = j.at("fx").get<double>();
  cam.fy = j.at("fy").get<double>();
  cam.cx = j.at("cx").get<double>();
  cam.cy = j.at("cy").get<double>();
  cam.width = j.at("width").get<int>();
  cam.height = j.at("height").get<int>();
  if (j.contains("pose")) cam.pose = pose_from_json(j.at("pose"));
  cam.validate();
  return cam;
}

json scene_to_json(const SceneState& scene, const std::optional<CameraModel>& camera) {
  json doc;
  if (scene.table) {
    doc["table"] = {{"size", {scene.table->size_x, scene.table->size_y}},
                    {"height", scene.table->height},
                    {"thickness", scene.table->thickness}};
  }
  json objects = json::array();
  for (const auto& o : scene.objects) {
    json dims;
    switch (o.shape.kind) {
      case ShapeKind::Box: dims = {2 * o.shape.half_extents.x(), 2 * o.shape.half_extents.y(), 2 * o.shape.half_extents.z()}; break;
      case ShapeKind::Sphere: dims = {o.shape.radius}; break;
      case ShapeKind::Cylinder: dims = {o.shape.radius, 2 * o.shape.half_height}; break;
    }
    objects.push_back({{"id", o.id},
                       {"shape", std::string(to_string(o.shape.kind))},
                       {"dims", dims},
                       {"pose", pose_to_json(o.pose)},
                       {"color", {o.color[0], o.color[1], o.color[2]}}});
  }
  doc["objects"] = objects;
  doc["gravity_axis"] = {scene.gravity_axis.x(), scene.gravity_axis.y(), scene.gravity_axis.z()};
  if (camera) doc["camera"] = camera_to_json(*camera);
  return doc;
}

SceneDocument scene_from_json(const json& j) {
  SceneDocument doc;
  try {
    if (j.contains("table")) {
      const auto& t = j.at("table");
      TableSlab table;
      table.size_x = t.at("size").at(0).get<double>();
      table.size_y = t.at("size").at(1).get<double>();
      table.height = t.at("height").get<double>();
      if (t.contains("thickness")) table.thickness = t.at("thickness").get<double>();
      if (!(table.size_x > 0 && table.size_y > 0 && table.thickness > 0)) {
        throw Error(ErrorCode::ConfigError, "table extents must be positive");
      }
      doc.scene.table = table;
    }
    for (const auto& jo : j.value("objects", json::array())) {
      SceneObject o;
      o.id = jo.at("id").get<std::string>();
      const auto kind = jo.at("shape").get<std::string>();
      const auto& dims = jo.at("dims");
      if (kind == "box") {
        o.shape = Shape::box(dims.at(0).get<double>(), dims.at(1).get<double>(), dims.at(2).get<double>());
      } else if (kind == "sphere") {
        o.shape = Shape::sphere(dims.at(0).get<double>());
      } else if (kind == "cylinder") {
        o.shape = Shape::cylinder(dims.at(0).get<double>(), dims.at(1).get<double>());
      } else {
        throw Error(ErrorCode::ConfigError, "unknown shape '" + kind + "'");
      }
      o.pose = pose_from_json(jo.at("pose"));
      if (jo.contains("color")) {
        const auto& c = jo.at("color");
        o.color = {c.at(0).get<std::uint8_t>(), c.at(1).get<std::uint8_t>(), c.at(2).get<std::uint8_t>()};
      }
      doc.scene.objects.push_back(std::move(o));
    }
    if (j.contains("gravity_axis")) {
      const auto& g = j.at("gravity_axis");
      doc.scene.gravity_axis = Vec3(g.at(0).get<double>(), g.at(1).get<double>(), g.at(2).get<double>());
    }
    if (j.contains("camera")) doc.camera = camera_from_json(j.at("camera"));
    doc.scene.validate();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("malformed scene document: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return doc;
}

}  // namespace w4o
