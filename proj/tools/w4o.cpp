#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "w4o/episode.hpp"
#include "w4o/gateway.hpp"
#include "w4o/scene.hpp"

using namespace w4o;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailures = 1;
constexpr int kExitConfig = 2;

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open '" + path + "'");
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw Error(ErrorCode::ConfigError, "'" + path + "' is not valid JSON");
  return j;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::ConfigError, "cannot write '" + path + "'");
  out << text << '\n';
}

struct RunArgs {
  std::string scene_template = "pick-place";
  std::uint64_t seed = 1;
  std::string task;
  std::string backend = "oracle";
  std::string mode = "open_loop";
  std::string out;
  std::size_t max_iters = 3;
  double grasp_threshold = 0.05;
  std::uint64_t trial = 0;
  std::size_t candidates = 1;
  double position_tol = 0.02;
  double rotation_tol = 10.0;
};

EpisodeConfig to_config(const RunArgs& a) {
  EpisodeConfig c;
  c.scene_template = a.scene_template;
  c.seed = a.seed;
  c.task = a.task;
  c.backends = BackendSelection::all(backend_kind_from_string(a.backend));
  c.gateway = GatewayConfig{}.with_env_override();
  c.mode = reobserve_mode_from_string(a.mode);
  c.max_iters = a.max_iters;
  c.grasp_threshold = a.grasp_threshold;
  c.trial = a.trial;
  c.trajectory_candidates = a.candidates;
  c.tolerances = {a.position_tol, a.rotation_tol};
  c.validate();
  return c;
}

void add_episode_options(CLI::App* cmd, RunArgs& a) {
  cmd->add_option("--backend", a.backend, "oracle | mock | remote")->capture_default_str();
  cmd->add_option("--mode", a.mode, "open_loop | closed_loop")->capture_default_str();
  cmd->add_option("--max-iters", a.max_iters, "reflection budget per subtask")->capture_default_str();
  cmd->add_option("--grasp-threshold", a.grasp_threshold, "meters")->capture_default_str();
  cmd->add_option("--candidates", a.candidates, "trajectory candidates per motion")->capture_default_str();
  cmd->add_option("--position-tol", a.position_tol, "success tolerance, meters")->capture_default_str();
  cmd->add_option("--rotation-tol", a.rotation_tol, "success tolerance, degrees")->capture_default_str();
}

int cmd_run(const RunArgs& a) {
  const EpisodeConfig config = to_config(a);
  const EpisodeReport report = run_episode(config);
  write_output(a.out, to_json(report).dump(2));
  std::cerr << (report.success ? "success" : "failure");
  if (report.failure) std::cerr << " (" << report.failure->stage << ": " << report.failure->message << ")";
  std::cerr << '\n';
  return report.success ? kExitOk : kExitFailures;
}

int cmd_bench(const RunArgs& a, const std::string& suite_path, const std::string& seeds, std::size_t trials,
              std::size_t workers) {
  const EpisodeConfig config = to_config(a);
  std::vector<BenchmarkTask> suite;
  if (suite_path.empty()) {
    for (const auto& t : task_templates()) suite.push_back({t.name, "", t.name});
  } else {
    suite = benchmark_suite_from_json(read_json_file(suite_path));
  }
  const BenchmarkReport report = run_benchmark(suite, parse_seed_range(seeds), trials, config, workers);
  write_output(a.out, to_json(report).dump(2));
  std::cerr << format_report(report);
  for (const auto& t : report.tasks) {
    if (t.successes != t.trials) return kExitFailures;
  }
  return kExitOk;
}

int cmd_export_cloud(const std::string& scene_path, const std::string& out) {
  const SceneDocument doc = scene_from_json(read_json_file(scene_path));
  const CameraModel cam = doc.camera ? *doc.camera : default_camera(doc.scene);
  const RenderedView view = render(doc.scene, cam);
  const PointCloud cloud = back_project_labeled(view.depth, cam, view.seg);
  save_ply(out, cloud);
  std::cerr << cloud.size() << " points written to " << out << '\n';
  return kExitOk;
}

int cmd_mock_server(const std::string& script_path, int port) {
  MockScript script = MockScript::from_json(read_json_file(script_path));
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  auto server = serve_mock(std::move(script), port);
  std::cout << "listening on " << server->url() << std::endl;
  int received = 0;
  sigwait(&signals, &received);
  server->stop();
  std::cerr << "served " << server->requests().size() << " requests\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical tabletop manipulation pipeline"};
  app.require_subcommand(1);

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Run one episode and write its JSON report");
  run->add_option("--scene-template", run_args.scene_template, "pick-place | take-off-rack")->capture_default_str();
  run->add_option("--seed", run_args.seed, "layout seed")->capture_default_str();
  run->add_option("--task", run_args.task, "instruction (default: the template's task)");
  run->add_option("--trial", run_args.trial, "motion-planner trial index")->capture_default_str();
  run->add_option("--out", run_args.out, "report path (default: stdout)");
  add_episode_options(run, run_args);

  RunArgs bench_args;
  std::string suite_path, seeds = "1..5";
  std::size_t trials = 10, workers = 1;
  auto* bench = app.add_subcommand("bench", "Run seeds x trials episodes per task");
  bench->add_option("--suite", suite_path, "suite JSON (default: every template)");
  bench->add_option("--seeds", seeds, "e.g. 1..5")->capture_default_str();
  bench->add_option("--trials", trials, "trials per seed")->capture_default_str();
  bench->add_option("--workers", workers, "parallel episodes")->capture_default_str();
  bench->add_option("--out", bench_args.out, "report path (default: stdout)");
  add_episode_options(bench, bench_args);

  std::string scene_path, cloud_out;
  auto* cloud = app.add_subcommand("export-cloud", "Render a scene file and write its labeled cloud as PLY");
  cloud->add_option("--scene", scene_path, "scene JSON")->required();
  cloud->add_option("--out", cloud_out, "PLY path")->required();

  std::string script_path;
  int port = 8700;
  auto* mock = app.add_subcommand("mock-server", "Serve scripted backend replies until interrupted");
  mock->add_option("--script", script_path, "script JSON")->required();
  mock->add_option("--port", port, "0 picks a free port")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*run) return cmd_run(run_args);
    if (*bench) return cmd_bench(bench_args, suite_path, seeds, trials, workers);
    if (*cloud) return cmd_export_cloud(scene_path, cloud_out);
    if (*mock) return cmd_mock_server(script_path, port);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::ConfigError:
      case ErrorCode::UnknownTemplate:
      case ErrorCode::InvalidArgument:
      case ErrorCode::PortUnavailable:
        return kExitConfig;
      default:
        return kExitFailures;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailures;
  }
  return kExitConfig;
}
