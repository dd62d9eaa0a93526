// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "support.hpp"
#include "w4o/episode.hpp"
#include "w4o/gateway.hpp"
#include "w4o/mocks.hpp"

using namespace w4o;
using namespace w4o::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("threw: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

Outcome umeyama_recovery() {
  Rng rng(2024);
  double worst_rot = 0, worst_trans = 0;
  const auto t0 = Clock::now();
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 10 + rng.below(491);
    const auto src = random_points(rng, n);
    const RigidTransform truth = random_transform(rng);
    std::vector<Vec3> dst;
    for (const auto& p : src) dst.push_back(truth * p);
    const PoseError e = pose_error(umeyama_align(src, dst).transform, truth);
    worst_rot = std::max(worst_rot, e.rotation_deg);
    worst_trans = std::max(worst_trans, e.translation);
  }
  const double elapsed = seconds_since(t0);
  return {worst_rot < 1e-6 && worst_trans < 1e-9 && elapsed < 1.0,
          "max rotation error " + fmt(worst_rot) + " deg, max translation error " + fmt(worst_trans) + " m, " +
              fmt(elapsed) + " s"};
}

Outcome projection_round_trip() {
  Rng rng(77);
  double worst = 0;
  std::size_t pixels = 0;
  for (int i = 0; i < 10; ++i) {
    const std::string tpl = i % 2 == 0 ? "pick-place" : "take-off-rack";
    const SceneState s = sample_layout(tpl, 1000 + rng.below(100000));
    const Vec3 target(0, 0, s.table->height);
    const double ex = rng.uniform(-0.3, 0.3), ey = rng.uniform(-1.2, -0.6), ez = rng.uniform(0.4, 0.9);
    const CameraModel cam = CameraModel::look_at(300, 300, 160, 120, target + Vec3(ex, ey, ez), target);
    const RenderedView view = render(s, cam);
    const PointCloud cloud = back_project(view.depth, cam);
    std::size_t k = 0;
    for (int v = 0; v < cam.height; ++v) {
      for (int u = 0; u < cam.width; ++u) {
        if (!view.depth.valid(u, v)) continue;
        const ProjectedPoint p = project_world(cloud.points[k++], cam);
        worst = std::max({worst, std::abs(p.u - u), std::abs(p.v - v), std::abs(p.depth - view.depth.at(u, v))});
      }
    }
    pixels += k;
  }
  return {worst <= 1e-9 && pixels > 0, fmt(pixels) + " pixels, max deviation " + fmt(worst)};
}

Outcome oracle_end_to_end() {
  const std::vector<BenchmarkTask> suite{{"pick-place", "", ""}, {"take-off-rack", "", ""}};
  const auto t0 = Clock::now();
  const BenchmarkReport r = run_benchmark(suite, parse_seed_range("1..5"), 10, EpisodeConfig{});
  const double elapsed = seconds_since(t0);
  bool ok = elapsed < 300.0;
  std::string detail;
  for (const auto& t : r.tasks) {
    ok = ok && t.trials == 50 && t.successes >= 48;
    detail += t.task.label + " " + std::to_string(t.successes) + "/" + std::to_string(t.trials) + ", ";
  }
  return {ok, detail + fmt(elapsed) + " s"};
}

Outcome registration_under_noise() {
  Rng rng(5150);
  std::size_t good = 0, good_world = 0, trials = 0, min_points = std::numeric_limits<std::size_t>::max();
  double worst = 0;
  for (int t = 0; t < 200; ++t) {
    const SceneState s = sample_layout(t % 2 == 0 ? "pick-place" : "take-off-rack", 1 + t / 2);
    const Observation o = OracleWorld(default_camera(s)).observation(s);
    // First object with enough rendered surface points.
    PointCloud now;
    RigidTransform frame;
    for (const auto& obj : s.objects) {
      now.points.clear();
      frame = obj.pose;
      const int label = s.label_of(obj.id);
      for (std::size_t i = 0; i < o.cloud.size(); ++i) {
        if ((*o.cloud.labels)[i] == label) now.points.push_back(o.cloud.points[i]);
      }
      if (now.size() >= 500) break;
    }
    if (now.size() < 500) continue;
    min_points = std::min(min_points, now.size());

    Vec3 c = Vec3::Zero();
    for (const auto& p : now.points) c += p;
    c /= static_cast<double>(now.size());
    const double dx = rng.uniform(-0.2, 0.2), dy = rng.uniform(-0.2, 0.2), dz = rng.uniform(0.0, 0.2);
    const Mat3 rot = random_rotation(rng);
    const RigidTransform truth = RigidTransform::from_translation(c + Vec3(dx, dy, dz)) * RigidTransform{rot, Vec3::Zero()} *
                                 RigidTransform::from_translation(-c);
    PointCloud goal;
    CorrespondenceSet corr;
    for (std::size_t i = 0; i < now.size(); ++i) {
      const double nx = rng.normal(0, 0.002), ny = rng.normal(0, 0.002), nz = rng.normal(0, 0.002);
      goal.points.push_back(truth * now.points[i] + Vec3(nx, ny, nz));
      corr.pairs.push_back({i, i});
    }
    const RigidTransform estimate = estimate_goal_transform(corr, now, goal).transform;
    // Translation is compared in the object's own frame: in world coordinates it would also carry
    // the rotation error times the distance to an arbitrary origin.
    const double err =
        pose_error(compose(invert(frame), compose(estimate, frame)), compose(invert(frame), compose(truth, frame)))
            .translation;
    worst = std::max(worst, err);
    good += err < 0.005;
    good_world += pose_error(estimate, truth).translation < 0.005;
    ++trials;
  }
  const double rate = trials ? 100.0 * static_cast<double>(good) / static_cast<double>(trials) : 0.0;
  return {trials == 200 && rate >= 95.0,
          std::to_string(good) + "/" + std::to_string(trials) + " under 5 mm in the object frame (" + fmt(rate) +
              "%), worst " + fmt(worst) + " m, at least " + std::to_string(min_points) + " points; world frame " +
              std::to_string(good_world) + "/" + std::to_string(trials)};
}

Outcome reflection_accounting() {
  const SceneState s = sample_layout("pick-place", 1);
  auto world = std::make_shared<OracleWorld>(default_camera(s));
  const Observation obs = world->observation(s);
  const std::string subtask = "Move the tomato vertically upward";
  std::size_t patterns = 0;
  for (std::size_t max_iters = 1; max_iters <= 5; ++max_iters) {
    // k = accepting iteration; max_iters + 1 stands for "never".
    for (std::size_t k = 1; k <= max_iters + 1; ++k) {
      std::vector<ReflectionVerdict> script(k - 1, ReflectionVerdict::revise(subtask));
      script.push_back(k <= max_iters ? ReflectionVerdict::accept() : ReflectionVerdict::revise(subtask));
      auto dreamer = std::make_shared<RecordingDreamer>(std::make_shared<OracleDreamer>(world));
      auto critic = std::make_shared<ScriptedCritic>(script);
      BackendSuite suite = make_oracle_suite(world);
      suite.dreamer = dreamer;
      suite.critic = critic;
      bool exhausted = false;
      std::size_t used = 0;
      try {
        used = reflective_generate(obs.image, subtask, "tomato", suite, obs, {max_iters}).iterations_used;
      } catch (const ReflectionBudgetExhausted&) {
        exhausted = true;
      }
      const std::size_t expected = std::min(k, max_iters);
      const bool should_exhaust = k > max_iters;
      if (dreamer->calls().size() != expected || critic->calls().size() != expected || exhausted != should_exhaust ||
          (!exhausted && used != k)) {
        return {false, "max_iters " + std::to_string(max_iters) + ", accept at " + std::to_string(k) + ": " +
                           std::to_string(dreamer->calls().size()) + " dreamer / " +
                           std::to_string(critic->calls().size()) + " critic calls"};
      }
      ++patterns;
    }
  }
  return {true, std::to_string(patterns) + " scripted patterns, call counts exact"};
}

Outcome grasp_filter_semantics() {
  // Every grasp sits inside, exactly on, or outside the threshold and takes one of three scores.
  constexpr double threshold = 0.05;
  const std::array<double, 3> offsets{0.01, threshold, 0.09};
  const std::array<double, 3> scores{0.2, 0.5, 0.9};
  PointCloud target;
  target.points = {Vec3::Zero()};
  std::size_t instances = 0;
  for (std::size_t n = 1; n <= 6; ++n) {
    std::size_t combos = 1;
    for (std::size_t i = 0; i < n; ++i) combos *= 9;
    for (std::size_t code = 0; code < combos; ++code) {
      std::vector<GraspPose> grasps;
      std::size_t c = code;
      for (std::size_t i = 0; i < n; ++i, c /= 9) {
        GraspPose g;
        g.pose = RigidTransform::from_translation(Vec3(offsets[c % 3], 0, 0));
        g.score = scores[(c / 3) % 3];
        g.width = 0.05;
        grasps.push_back(g);
      }
      std::optional<std::size_t> best;
      for (std::size_t i = 0; i < n; ++i) {
        if (grasps[i].center().norm() > threshold) continue;
        if (!best || grasps[i].score > grasps[*best].score) best = i;
      }
      try {
        const FilteredGrasp f = filter_grasps(grasps, target, threshold);
        if (!best || f.index != *best || f.grasp.score != grasps[*best].score) {
          return {false, "wrong selection for instance " + std::to_string(code) + " of size " + std::to_string(n)};
        }
      } catch (const Error& e) {
        if (best || e.code() != ErrorCode::NoFeasibleGrasp) {
          return {false, "unexpected " + std::string(e.what()) + " for instance " + std::to_string(code)};
        }
      }
      ++instances;
    }
  }
  return {true, std::to_string(instances) + " instances with 1-6 grasps"};
}

Outcome gateway_wire_contract() {
  std::vector<std::string> notes;
  auto expect_code = [](const std::function<void()>& fn, ErrorCode want) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code() == want;
    }
    return false;
  };
  const json plan{{"subtasks", {"Move the tomato vertically upward"}}, {"targets", {"tomato"}}};
  const BackendRequest req =
      BackendRequest::make(RequestKind::Plan, {{"task", "Put the tomato in the pan"}, {"image_png_b64", "AA=="}});

  // Bit-exact image round trip through an echoing dreamer.
  {
    MockReply echo;
    echo.echo_fields = {{"image_png_b64", "image_png_b64"}};
    MockScript s;
    s.replies.emplace_back(RequestKind::Dream, std::vector{echo});
    auto server = serve_mock(s);
    GatewayConfig c;
    c.base_url = server->url();
    Rng rng(8);
    RgbImage img(64, 48);
    for (auto& b : img.data) b = static_cast<std::uint8_t>(rng.below(256));
    if (!(RemoteDreamer(std::make_shared<Gateway>(c)).dream(img, "p") == img)) return {false, "image changed in transit"};
  }
  // Retries: same body and id every attempt; exactly max_retries + 1 attempts before giving up.
  for (int retries = 0; retries <= 3; ++retries) {
    MockReply fail;
    fail.status = 503;
    MockScript s;
    s.replies.emplace_back(RequestKind::Plan, std::vector{fail});
    auto server = serve_mock(s);
    GatewayConfig c;
    c.base_url = server->url();
    c.max_retries = retries;
    c.backoff_base_s = 0.001;
    if (!expect_code([&] { call(c, req); }, ErrorCode::RetriesExhausted)) return {false, "no RetriesExhausted"};
    const auto log = server->requests();
    if (log.size() != static_cast<std::size_t>(retries + 1)) {
      return {false, std::to_string(log.size()) + " attempts with max_retries " + std::to_string(retries)};
    }
    for (const auto& r : log) {
      if (r.body != log[0].body || r.request_id != req.request_id) return {false, "retry changed the request"};
    }
  }
  {
    MockReply fail;
    fail.status = 500;
    MockReply good;
    good.body = plan;
    MockScript s;
    s.replies.emplace_back(RequestKind::Plan, std::vector{fail, good});
    auto server = serve_mock(s);
    GatewayConfig c;
    c.base_url = server->url();
    c.backoff_base_s = 0.001;
    if (call(c, req) != plan || server->requests().size() != 2) return {false, "retry did not recover"};
  }
  // Schema rejection.
  {
    MockReply garbage, missing, wrong_type;
    garbage.raw = "not json";
    missing.body = {{"subtasks", {"a"}}};
    wrong_type.body = {{"subtasks", "a"}, {"targets", {"tomato"}}};
    MockScript s;
    s.replies.emplace_back(RequestKind::Plan, std::vector{garbage, missing, wrong_type});
    auto server = serve_mock(s);
    GatewayConfig c;
    c.base_url = server->url();
    for (int i = 0; i < 3; ++i) {
      if (!expect_code([&] { call(c, req); }, ErrorCode::MalformedResponse)) return {false, "malformed reply accepted"};
    }
  }
  return {true, "image echo exact, 1-4 attempts with identical body and id, malformed replies rejected"};
}

Outcome report_formatting() {
  BenchmarkReport r;
  const std::vector<std::size_t> successes{10, 20, 10, 30};
  for (std::size_t i = 0; i < successes.size(); ++i) {
    TaskResult t;
    t.task = {"pick-place", "", "Task " + std::to_string(i + 1)};
    t.successes = successes[i];
    t.trials = 50;
    r.tasks.push_back(t);
  }
  const std::string table = format_report(r);
  const std::string expected =
      "| Method | Task 1 | Task 2 | Task 3 | Task 4 | Average Success Rate |\n"
      "|---|---|---|---|---|---|\n"
      "| w4o | 10 / 50 | 20 / 50 | 10 / 50 | 30 / 50 | 35% |\n";
  const bool ok = table == expected && format_percent(r.average_success_rate()) == "35%";
  std::string last = table.substr(table.rfind("| w4o"));
  last.pop_back();
  return {ok, last};
}

json strip_timings(json j) {
  if (j.is_object()) {
    j.erase("timings");
    for (auto& [k, v] : j.items()) v = strip_timings(v);
  } else if (j.is_array()) {
    for (auto& v : j) v = strip_timings(v);
  }
  return j;
}

std::string run_cli(const std::string& args, const fs::path& out) {
  const std::string cmd = std::string(W4O_CLI_PATH) + " " + args + " --out " + out.string() + " 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  std::ifstream in(out);
  std::stringstream ss;
  ss << in.rdbuf();
  if (rc != 0) throw std::runtime_error("'" + cmd + "' exited with " + std::to_string(rc));
  return strip_timings(json::parse(ss.str())).dump();
}

Outcome cli_determinism() {
  const fs::path dir = fs::temp_directory_path() / ("w4o-accept-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  const std::vector<std::string> invocations{
      "run --scene-template pick-place --seed 3",
      "run --scene-template take-off-rack --seed 2 --trial 4 --backend mock --mode closed_loop",
      "bench --seeds 1..2 --trials 2",
      "bench --seeds 1..2 --trials 2 --workers 2",
  };
  std::string detail;
  bool ok = true;
  std::string bench_reference;
  for (std::size_t i = 0; i < invocations.size(); ++i) {
    const std::string a = run_cli(invocations[i], dir / "a.json");
    const std::string b = run_cli(invocations[i], dir / "b.json");
    ok = ok && a == b;
    if (invocations[i].rfind("bench", 0) == 0) {
      if (bench_reference.empty()) bench_reference = a;
      ok = ok && a == bench_reference;
    }
  }
  fs::remove_all(dir);
  return {ok, std::to_string(invocations.size()) + " invocations repeated, reports identical without timings"};
}

}  // namespace

int main() {
  report("umeyama-recovery", umeyama_recovery);
  report("projection-round-trip", projection_round_trip);
  report("oracle-end-to-end", oracle_end_to_end);
  report("registration-under-noise", registration_under_noise);
  report("reflection-accounting", reflection_accounting);
  report("grasp-filter-semantics", grasp_filter_semantics);
  report("gateway-wire-contract", gateway_wire_contract);
  report("report-formatting", report_formatting);
  report("cli-determinism", cli_determinism);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
