#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "w4o/agents.hpp"
#include "w4o/gateway.hpp"
#include "w4o/oracle.hpp"
#include "w4o/policy.hpp"
#include "w4o/scene.hpp"

namespace w4o {

enum class BackendKind { Oracle, Mock, Remote };
std::string_view to_string(BackendKind k);
BackendKind backend_kind_from_string(std::string_view s);  // throws ConfigError

enum class ReobserveMode { OpenLoop, ClosedLoop };
std::string_view to_string(ReobserveMode m);
ReobserveMode reobserve_mode_from_string(std::string_view s);  // throws ConfigError

struct Tolerances {
  double position = 0.02;
  double rotation_deg = 10.0;
};

/// Backend choice for each model slot.
struct BackendSelection {
  BackendKind planner = BackendKind::Oracle;
  BackendKind dreamer = BackendKind::Oracle;
  BackendKind critic = BackendKind::Oracle;
  BackendKind depth = BackendKind::Oracle;
  BackendKind segmenter = BackendKind::Oracle;

  static BackendSelection all(BackendKind k) { return {k, k, k, k, k}; }
};

struct EpisodeConfig {
  std::string scene_template = "pick-place";
  std::uint64_t seed = 1;
  /// Empty means the template's default task.
  std::string task;
  BackendSelection backends;
  GatewayConfig gateway;
  std::size_t max_iters = 3;
  double grasp_threshold = 0.05;
  ReobserveMode mode = ReobserveMode::OpenLoop;
  Tolerances tolerances;
  /// Perturbs only the motion planner's random stream.
  std::uint64_t trial = 0;
  std::size_t trajectory_candidates = 1;

  void validate() const;
};

nlohmann::json to_json(const EpisodeConfig& c);

struct StageTimings {
  double layout_s = 0.0;
  double plan_s = 0.0;
  double subgoals_s = 0.0;
  double execution_s = 0.0;
  double total_s = 0.0;
};

struct SubgoalSummary {
  std::size_t index = 0;
  std::size_t iterations_used = 0;
  std::vector<std::string> prompt_history;
  double depth_scale = 1.0;
};

struct EpisodeFailure {
  std::string stage;
  ErrorCode code = ErrorCode::InvalidArgument;
  std::string message;
  std::optional<std::size_t> subtask_index;
};

struct EpisodeReport {
  EpisodeConfig config;
  std::string task;
  std::optional<SubtaskPlan> plan;
  std::vector<SubgoalSummary> subgoals;
  std::vector<ActionRecord> actions;
  std::string moved_object;
  std::optional<SceneState> initial_scene;
  std::optional<SceneState> final_scene;
  std::optional<SceneState> goal_scene;
  std::optional<EpisodeFailure> failure;
  bool success = false;
  StageTimings timings;
};

/// Wall-clock values sit under the top-level "timings" key only.
nlohmann::json to_json(const EpisodeReport& r);

using SuiteFactory = std::function<BackendSuite(const std::shared_ptr<OracleWorld>&)>;

/// Builds the configured suite; oracle and mock slots answer from `world`.
BackendSuite make_suite(const EpisodeConfig& config, const std::shared_ptr<OracleWorld>& world);

/// Stage errors are recorded in the report; this does not throw for them.
EpisodeReport run_episode(const EpisodeConfig& config);
EpisodeReport run_episode(const EpisodeConfig& config, const SuiteFactory& factory);

/// Pose check with a symmetry table: spheres compare position only, cylinders also compare the
/// direction of their axis, boxes compare the full rotation.
bool evaluate_success(const SceneState& final_scene, const SceneState& goal_scene, std::string_view object_id,
                      const Tolerances& tol);

/// Goal scene for a task: the template decomposition's oracle futures applied in order.
SceneState goal_scene_for(const SceneState& initial, std::string_view task);

// Benchmarks

struct BenchmarkTask {
  std::string scene_template;
  std::string task;  // empty: template default
  std::string label;  // column header; empty: template name
};

struct EpisodeOutcome {
  std::uint64_t seed = 0;
  std::uint64_t trial = 0;
  bool success = false;
  std::string failure;
};

struct TaskResult {
  BenchmarkTask task;
  std::size_t successes = 0;
  std::size_t trials = 0;
  std::vector<EpisodeOutcome> episodes;
};

struct BenchmarkReport {
  std::string method = "w4o";
  std::vector<TaskResult> tasks;
  double total_s = 0.0;

  /// Percent; 0 when there are no trials at all (see average_defined).
  double average_success_rate() const;
  bool average_defined() const;
};

nlohmann::json to_json(const BenchmarkReport& r);

std::vector<BenchmarkTask> benchmark_suite_from_json(const nlohmann::json& j);  // throws ConfigError

/// Runs seeds x trials episodes per task; `workers` > 1 runs episodes on a thread pool, with
/// results identical to the sequential run.
BenchmarkReport run_benchmark(const std::vector<BenchmarkTask>& suite, const std::vector<std::uint64_t>& seeds,
                              std::size_t trials_per_seed, const EpisodeConfig& base, std::size_t workers = 1,
                              const SuiteFactory& factory = nullptr);

/// "12.5%" style; integral values print without decimals.
std::string format_percent(double percent);

/// Markdown table: a header row of task labels, then the method row with "s / n" cells and the
/// average success rate.
std::string format_report(const BenchmarkReport& r);

/// Parses "1..5", "3", or "1,2,7".
std::vector<std::uint64_t> parse_seed_range(std::string_view text);  // throws ConfigError

}  // namespace w4o
