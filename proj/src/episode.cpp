#include "w4o/episode.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <thread>

#include "w4o/mocks.hpp"
#include "w4o/random.hpp"

namespace w4o {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

EpisodeFailure failure_from(std::string stage, const std::exception& e, std::optional<std::size_t> index = {}) {
  EpisodeFailure f{std::move(stage), ErrorCode::BackendFailure, e.what(), index};
  if (const auto* err = dynamic_cast<const Error*>(&e)) f.code = err->code();
  if (const auto* step = dynamic_cast<const StepError*>(&e); step && !index) f.subtask_index = step->index();
  return f;
}

RigidTransform home_pose(const SceneState& scene) {
  const Vec3 up = scene.gravity_axis.normalized();
  const double base = scene.table ? scene.table->height : 0.0;
  return top_down_pose(up * (base + 0.45), up);
}

}  // namespace

std::string_view to_string(BackendKind k) {
  switch (k) {
    case BackendKind::Oracle: return "oracle";
    case BackendKind::Mock: return "mock";
    case BackendKind::Remote: return "remote";
  }
  return "oracle";
}

BackendKind backend_kind_from_string(std::string_view s) {
  for (auto k : {BackendKind::Oracle, BackendKind::Mock, BackendKind::Remote}) {
    if (to_string(k) == s) return k;
  }
  throw Error(ErrorCode::ConfigError, "unknown backend '" + std::string(s) + "' (oracle|mock|remote)");
}

std::string_view to_string(ReobserveMode m) { return m == ReobserveMode::OpenLoop ? "open_loop" : "closed_loop"; }

ReobserveMode reobserve_mode_from_string(std::string_view s) {
  if (s == "open_loop") return ReobserveMode::OpenLoop;
  if (s == "closed_loop") return ReobserveMode::ClosedLoop;
  throw Error(ErrorCode::ConfigError, "unknown mode '" + std::string(s) + "' (open_loop|closed_loop)");
}

void EpisodeConfig::validate() const {
  find_template(scene_template);
  if (max_iters < 1) throw Error(ErrorCode::ConfigError, "max_iters must be >= 1");
  if (!(tolerances.position > 0) || !(tolerances.rotation_deg > 0)) {
    throw Error(ErrorCode::ConfigError, "tolerances must be > 0");
  }
  if (!std::isfinite(grasp_threshold)) throw Error(ErrorCode::ConfigError, "grasp threshold must be finite");
  if (trajectory_candidates < 1) throw Error(ErrorCode::ConfigError, "trajectory candidates must be >= 1");
}

json to_json(const EpisodeConfig& c) {
  return {{"scene_template", c.scene_template},
          {"seed", c.seed},
          {"task", c.task},
          {"backends",
           {{"planner", to_string(c.backends.planner)},
            {"dreamer", to_string(c.backends.dreamer)},
            {"critic", to_string(c.backends.critic)},
            {"depth", to_string(c.backends.depth)},
            {"segmenter", to_string(c.backends.segmenter)}}},
          {"max_iters", c.max_iters},
          {"grasp_threshold", c.grasp_threshold},
          {"mode", to_string(c.mode)},
          {"tolerances", {{"position", c.tolerances.position}, {"rotation_deg", c.tolerances.rotation_deg}}},
          {"trial", c.trial},
          {"trajectory_candidates", c.trajectory_candidates}};
}

json to_json(const EpisodeReport& r) {
  json j;
  j["config"] = to_json(r.config);
  j["task"] = r.task;
  if (r.plan) {
    j["plan"] = {{"subtasks", r.plan->subtasks}, {"targets", r.plan->targets}};
  } else {
    j["plan"] = nullptr;
  }
  j["subgoals"] = json::array();
  for (const auto& s : r.subgoals) {
    j["subgoals"].push_back({{"index", s.index},
                             {"iterations_used", s.iterations_used},
                             {"prompt_history", s.prompt_history},
                             {"depth_scale", s.depth_scale}});
  }
  j["actions"] = json::array();
  for (const auto& a : r.actions) j["actions"].push_back(to_json(a));
  j["moved_object"] = r.moved_object;
  j["initial_scene"] = r.initial_scene ? scene_to_json(*r.initial_scene) : json(nullptr);
  j["final_scene"] = r.final_scene ? scene_to_json(*r.final_scene) : json(nullptr);
  j["goal_scene"] = r.goal_scene ? scene_to_json(*r.goal_scene) : json(nullptr);
  if (r.failure) {
    json f{{"stage", r.failure->stage}, {"code", to_string(r.failure->code)}, {"message", r.failure->message}};
    f["subtask_index"] = r.failure->subtask_index ? json(*r.failure->subtask_index) : json(nullptr);
    j["failure"] = f;
  } else {
    j["failure"] = nullptr;
  }
  if (r.final_scene && r.goal_scene && !r.moved_object.empty()) {
    const auto* a = r.final_scene->find(r.moved_object);
    const auto* b = r.goal_scene->find(r.moved_object);
    if (a && b) {
      const PoseError e = pose_error(a->pose, b->pose);
      j["final_pose_error"] = {{"translation", e.translation}, {"rotation_deg", e.rotation_deg}};
    }
  }
  j["success"] = r.success;
  j["timings"] = {{"layout_s", r.timings.layout_s},
                  {"plan_s", r.timings.plan_s},
                  {"subgoals_s", r.timings.subgoals_s},
                  {"execution_s", r.timings.execution_s},
                  {"total_s", r.timings.total_s}};
  return j;
}

BackendSuite make_suite(const EpisodeConfig& config, const std::shared_ptr<OracleWorld>& world) {
  const BackendSuite oracle = make_oracle_suite(world);
  const BackendSuite mock = make_mock_suite(world);
  std::optional<BackendSuite> remote;
  auto pick = [&](BackendKind k) -> const BackendSuite& {
    if (k == BackendKind::Oracle) return oracle;
    if (k == BackendKind::Mock) return mock;
    if (!remote) remote = make_remote_suite(config.gateway);
    return *remote;
  };
  BackendSuite s;
  s.planner = pick(config.backends.planner).planner;
  s.dreamer = pick(config.backends.dreamer).dreamer;
  s.critic = pick(config.backends.critic).critic;
  s.depth_estimator = pick(config.backends.depth).depth_estimator;
  s.segmenter = pick(config.backends.segmenter).segmenter;
  return s;
}

SceneState goal_scene_for(const SceneState& initial, std::string_view task) {
  SceneState goal = initial;
  for (const auto& s : decompose_task(task).subtasks) goal = oracle_future_scene(goal, s);
  return goal;
}

bool evaluate_success(const SceneState& final_scene, const SceneState& goal_scene, std::string_view object_id,
                      const Tolerances& tol) {
  const SceneObject& a = final_scene.object(object_id);
  const SceneObject& b = goal_scene.object(object_id);
  const PoseError e = pose_error(a.pose, b.pose);
  if (!(e.translation <= tol.position)) return false;
  switch (a.shape.kind) {
    case ShapeKind::Sphere:
      return true;
    case ShapeKind::Cylinder: {
      const double c = std::clamp(a.pose.rotation.col(2).dot(b.pose.rotation.col(2)), -1.0, 1.0);
      return std::acos(c) * 180.0 / 3.14159265358979323846 <= tol.rotation_deg;
    }
    case ShapeKind::Box:
      return e.rotation_deg <= tol.rotation_deg;
  }
  return false;
}

EpisodeReport run_episode(const EpisodeConfig& config) {
  return run_episode(config, [&config](const std::shared_ptr<OracleWorld>& w) { return make_suite(config, w); });
}

EpisodeReport run_episode(const EpisodeConfig& config, const SuiteFactory& factory) {
  const auto t_start = Clock::now();
  EpisodeReport report;
  report.config = config;
  auto finish = [&]() -> EpisodeReport {
    report.timings.total_s = seconds_since(t_start);
    return report;
  };

  SceneState scene;
  std::shared_ptr<OracleWorld> world;
  Observation obs0;
  BackendSuite suite;
  try {
    config.validate();
    report.task = config.task.empty() ? find_template(config.scene_template).default_task : config.task;
    const auto t0 = Clock::now();
    scene = sample_layout(config.scene_template, config.seed);
    report.timings.layout_s = seconds_since(t0);
    report.initial_scene = scene;
    report.final_scene = scene;
    report.moved_object = decompose_task(report.task).moved_object;
    report.goal_scene = goal_scene_for(scene, report.task);
    world = std::make_shared<OracleWorld>(default_camera(scene));
    obs0 = world->observation(scene);
    suite = factory(world);
    suite.require_complete();
  } catch (const std::exception& e) {
    report.failure = failure_from("setup", e);
    return finish();
  }

  const ReflectionOptions reflection{config.max_iters};
  try {
    const auto t0 = Clock::now();
    report.plan = plan_subtasks(report.task, obs0.image, *suite.planner);
    report.timings.plan_s = seconds_since(t0);
  } catch (const std::exception& e) {
    report.failure = failure_from("plan", e);
    return finish();
  }
  const SubtaskPlan& plan = *report.plan;

  // Subgoals generated from images only can be compared to the oracle registry; otherwise fall back
  // to the self-contained matcher.
  std::unique_ptr<CorrespondenceMatcher> matcher;
  if (config.backends.dreamer == BackendKind::Remote) {
    matcher = std::make_unique<PrincipalAxesMatcher>();
  } else {
    matcher = std::make_unique<OracleMatcher>(world);
  }

  std::vector<SubgoalPrediction> chained;
  if (config.mode == ReobserveMode::OpenLoop) {
    const auto t0 = Clock::now();
    try {
      chained = chain_subgoals(obs0.image, plan, suite, obs0, reflection);
    } catch (const ChainError& e) {
      for (std::size_t i = 0; i < e.completed().size(); ++i) {
        const auto& p = e.completed()[i];
        report.subgoals.push_back({i, p.iterations_used, p.prompt_history, p.depth_scale});
      }
      report.timings.subgoals_s = seconds_since(t0);
      report.failure = failure_from("subgoal", e, e.index());
      return finish();
    } catch (const std::exception& e) {
      report.failure = failure_from("subgoal", e);
      return finish();
    }
    report.timings.subgoals_s = seconds_since(t0);
  }

  ExecutionConfig exec;
  exec.grasp_threshold = config.grasp_threshold;
  exec.trajectory_candidates = config.trajectory_candidates;
  const std::uint64_t episode_stream = derive_seed("planner", config.seed, config.trial);

  RigidTransform gripper = home_pose(scene);
  for (std::size_t i = 0; i < plan.subtasks.size(); ++i) {
    const Observation now = i == 0 ? obs0 : world->observation(scene);
    SubgoalPrediction closed;
    if (config.mode == ReobserveMode::ClosedLoop) {
      const auto t0 = Clock::now();
      try {
        closed = reflective_generate(now.image, plan.subtasks[i], plan.targets[i], suite, now, reflection);
      } catch (const std::exception& e) {
        report.timings.subgoals_s += seconds_since(t0);
        report.failure = failure_from("subgoal", e, i);
        return finish();
      }
      report.timings.subgoals_s += seconds_since(t0);
    }
    const SubgoalPrediction& goal = config.mode == ReobserveMode::OpenLoop ? chained[i] : closed;
    report.subgoals.push_back({i, goal.iterations_used, goal.prompt_history, goal.depth_scale});

    const auto t0 = Clock::now();
    exec.planner.seed = derive_seed("subtask", episode_stream, i);
    ExecutionResult r =
        execute_subtask(now, goal, scene, plan.targets[i], i, gripper, *suite.segmenter, *matcher, exec);
    report.timings.execution_s += seconds_since(t0);
    report.actions.push_back(r.record);
    if (!r.record.succeeded) {
      report.failure = EpisodeFailure{"execute", r.record.failure_code.value_or(ErrorCode::BackendFailure),
                                      r.record.failure_reason, i};
      return finish();
    }
    scene = std::move(r.scene);
    gripper = r.gripper;
    report.final_scene = scene;
  }

  try {
    report.success = evaluate_success(*report.final_scene, *report.goal_scene, report.moved_object, config.tolerances);
  } catch (const std::exception& e) {
    report.failure = failure_from("evaluate", e);
  }
  return finish();
}

// ---------------------------------------------------------------------------
// Benchmarks

double BenchmarkReport::average_success_rate() const {
  std::size_t s = 0, n = 0;
  for (const auto& t : tasks) {
    s += t.successes;
    n += t.trials;
  }
  return n == 0 ? 0.0 : 100.0 * static_cast<double>(s) / static_cast<double>(n);
}

bool BenchmarkReport::average_defined() const {
  return std::any_of(tasks.begin(), tasks.end(), [](const TaskResult& t) { return t.trials > 0; });
}

json to_json(const BenchmarkReport& r) {
  json tasks = json::array();
  for (const auto& t : r.tasks) {
    json eps = json::array();
    for (const auto& e : t.episodes) {
      eps.push_back({{"seed", e.seed}, {"trial", e.trial}, {"success", e.success}, {"failure", e.failure}});
    }
    tasks.push_back({{"template", t.task.scene_template},
                     {"task", t.task.task},
                     {"label", t.task.label},
                     {"successes", t.successes},
                     {"trials", t.trials},
                     {"episodes", eps}});
  }
  return {{"method", r.method},
          {"tasks", tasks},
          {"average_success_rate", r.average_success_rate()},
          {"average_defined", r.average_defined()},
          {"table", format_report(r)},
          {"timings", {{"total_s", r.total_s}}}};
}

std::vector<BenchmarkTask> benchmark_suite_from_json(const json& j) {
  const json* list = &j;
  if (j.is_object()) {
    if (!j.contains("tasks")) throw Error(ErrorCode::ConfigError, "suite needs a 'tasks' array");
    list = &j["tasks"];
  }
  if (!list->is_array() || list->empty()) throw Error(ErrorCode::ConfigError, "suite must list at least one task");
  std::vector<BenchmarkTask> out;
  try {
    for (const auto& e : *list) {
      BenchmarkTask t;
      if (e.is_string()) {
        t.scene_template = e.get<std::string>();
      } else {
        t.scene_template = e.at("template").get<std::string>();
        t.task = e.value("task", std::string());
        t.label = e.value("label", std::string());
      }
      find_template(t.scene_template);
      out.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("suite: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return out;
}

BenchmarkReport run_benchmark(const std::vector<BenchmarkTask>& suite, const std::vector<std::uint64_t>& seeds,
                              std::size_t trials_per_seed, const EpisodeConfig& base, std::size_t workers,
                              const SuiteFactory& factory) {
  if (suite.empty()) throw Error(ErrorCode::ConfigError, "benchmark suite is empty");
  const auto t0 = Clock::now();
  struct Job {
    std::size_t task;
    std::uint64_t seed;
    std::uint64_t trial;
  };
  std::vector<Job> jobs;
  for (std::size_t t = 0; t < suite.size(); ++t) {
    for (auto seed : seeds) {
      for (std::uint64_t k = 0; k < trials_per_seed; ++k) jobs.push_back({t, seed, k});
    }
  }

  std::vector<EpisodeOutcome> outcomes(jobs.size());
  auto run = [&](std::size_t j) {
    EpisodeConfig c = base;
    c.scene_template = suite[jobs[j].task].scene_template;
    c.task = suite[jobs[j].task].task;
    c.seed = jobs[j].seed;
    c.trial = jobs[j].trial;
    const EpisodeReport r = factory ? run_episode(c, factory) : run_episode(c);
    std::string failure;
    if (r.failure) {
      failure = std::string(to_string(r.failure->code));
    } else if (!r.success) {
      failure = "OutsideTolerance";
    }
    outcomes[j] = {c.seed, c.trial, r.success, failure};
  };

  workers = std::max<std::size_t>(1, std::min(workers, jobs.size()));
  if (workers == 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j) run(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < jobs.size(); j = next++) run(j);
      });
    }
    for (auto& th : pool) th.join();
  }

  BenchmarkReport report;
  for (const auto& t : suite) {
    TaskResult tr;
    tr.task = t;
    if (tr.task.label.empty()) tr.task.label = t.scene_template;
    report.tasks.push_back(std::move(tr));
  }
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    TaskResult& tr = report.tasks[jobs[j].task];
    ++tr.trials;
    if (outcomes[j].success) ++tr.successes;
    tr.episodes.push_back(outcomes[j]);
  }
  report.total_s = seconds_since(t0);
  return report;
}

std::string format_percent(double percent) {
  std::ostringstream os;
  const double rounded = std::round(percent);
  if (std::abs(percent - rounded) < 1e-9) {
    os << static_cast<long long>(rounded) << '%';
  } else {
    os << std::fixed << std::setprecision(1) << percent << '%';
  }
  return os.str();
}

std::string format_report(const BenchmarkReport& r) {
  std::ostringstream os;
  os << "| Method |";
  for (const auto& t : r.tasks) os << ' ' << (t.task.label.empty() ? t.task.scene_template : t.task.label) << " |";
  os << " Average Success Rate |\n|---|";
  for (std::size_t i = 0; i < r.tasks.size(); ++i) os << "---|";
  os << "---|\n| " << r.method << " |";
  for (const auto& t : r.tasks) os << ' ' << t.successes << " / " << t.trials << " |";
  os << ' ' << format_percent(r.average_success_rate()) << " |\n";
  return os.str();
}

std::vector<std::uint64_t> parse_seed_range(std::string_view text) {
  auto parse_one = [&](std::string_view s) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || s.empty()) {
      throw Error(ErrorCode::ConfigError, "bad seed '" + std::string(s) + "'");
    }
    return v;
  };
  std::vector<std::uint64_t> out;
  if (const auto dots = text.find(".."); dots != std::string_view::npos) {
    const auto lo = parse_one(text.substr(0, dots));
    const auto hi = parse_one(text.substr(dots + 2));
    if (hi < lo) throw Error(ErrorCode::ConfigError, "empty seed range '" + std::string(text) + "'");
    for (auto s = lo; s <= hi; ++s) out.push_back(s);
    return out;
  }
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string_view::npos ? text.size() : comma;
    out.push_back(parse_one(text.substr(start, end - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace w4o
