#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>

#include "support.hpp"
#include "w4o/agents.hpp"
#include "w4o/mocks.hpp"
#include "w4o/oracle.hpp"

using namespace w4o;
using namespace w4o::testing;

namespace {

struct Fixture {
  SceneState scene = sample_layout("pick-place", 1);
  std::shared_ptr<OracleWorld> world = std::make_shared<OracleWorld>(default_camera(scene));
  Observation obs = world->observation(scene);
  BackendSuite suite = make_oracle_suite(world);
};

class ThrowingPlanner final : public PlannerBackend {
 public:
  PlanResult plan(std::string_view, const RgbImage&) override { throw std::runtime_error("model offline"); }
};

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("plan_subtasks returns the scripted three-step decomposition") {
  Fixture f;
  const SubtaskPlan plan = plan_subtasks("Put the tomato in the pan", f.obs.image, *f.suite.planner);
  REQUIRE(plan.subtasks.size() == 3);
  CHECK(plan.subtasks[0] == "Move the tomato vertically upward");
  CHECK(plan.targets == std::vector<std::string>(3, "tomato"));
  CHECK(plan.task == "Put the tomato in the pan");
}

TEST_CASE("plan_subtasks error paths") {
  Fixture f;
  CHECK(code_of([&] { plan_subtasks("", f.obs.image, *f.suite.planner); }) == ErrorCode::InvalidArgument);
  ThrowingPlanner broken;
  CHECK(code_of([&] { plan_subtasks("Put the tomato in the pan", f.obs.image, broken); }) ==
        ErrorCode::PlannerBackendFailure);
  CHECK(code_of([&] { plan_subtasks("Juggle the tomato", f.obs.image, *f.suite.planner); }) ==
        ErrorCode::PlannerBackendFailure);
  ScriptedPlanner empty(PlanResult{});
  CHECK(code_of([&] { plan_subtasks("Put the tomato in the pan", f.obs.image, empty); }) == ErrorCode::EmptyPlan);
  ScriptedPlanner untagged(PlanResult{{"Move the tomato vertically upward"}, {}});
  CHECK(code_of([&] { plan_subtasks("Put the tomato in the pan", f.obs.image, untagged); }) ==
        ErrorCode::PlannerBackendFailure);
}

TEST_CASE("reflection accounting") {
  Fixture f;
  const std::string subtask = "Move the tomato vertically upward";
  auto run = [&](std::vector<ReflectionVerdict> script, std::shared_ptr<RecordingDreamer>& dreamer,
                 std::shared_ptr<ScriptedCritic>& critic) {
    dreamer = std::make_shared<RecordingDreamer>(std::make_shared<OracleDreamer>(f.world));
    critic = std::make_shared<ScriptedCritic>(std::move(script));
    BackendSuite s = f.suite;
    s.dreamer = dreamer;
    s.critic = critic;
    return reflective_generate(f.obs.image, subtask, "tomato", s, f.obs, {3});
  };
  std::shared_ptr<RecordingDreamer> dreamer;
  std::shared_ptr<ScriptedCritic> critic;

  SUBCASE("accepted on the first candidate") {
    const SubgoalPrediction p = run({ReflectionVerdict::accept()}, dreamer, critic);
    CHECK(p.iterations_used == 1);
    CHECK(dreamer->calls().size() == 1);
    CHECK(critic->calls().size() == 1);
  }
  SUBCASE("two rejections then acceptance") {
    const SubgoalPrediction p =
        run({ReflectionVerdict::revise("Move the tomato vertically upward, gently"),
             ReflectionVerdict::revise("Move the tomato vertically upward, slowly"), ReflectionVerdict::accept()},
            dreamer, critic);
    CHECK(p.iterations_used == 3);
    CHECK(dreamer->calls().size() == 3);
    CHECK(critic->calls().size() == 3);
    // Revised prompts reach the dreamer verbatim; the critic always judges the original subtask.
    REQUIRE(p.prompt_history.size() == 3);
    CHECK(dreamer->calls()[0].prompt == subtask);
    CHECK(dreamer->calls()[1].prompt == "Move the tomato vertically upward, gently");
    CHECK(dreamer->calls()[2].prompt == "Move the tomato vertically upward, slowly");
    for (const auto& c : critic->calls()) CHECK(c.subtask == subtask);
    for (const auto& c : dreamer->calls()) CHECK(c.image_digest == f.obs.image.digest());
  }
  SUBCASE("budget exhausted") {
    try {
      run({ReflectionVerdict::revise("Move the tomato vertically upward")}, dreamer, critic);
      FAIL("expected ReflectionBudgetExhausted");
    } catch (const ReflectionBudgetExhausted& e) {
      CHECK(e.code() == ErrorCode::ReflectionBudgetExhausted);
      CHECK(e.iterations() == 3);
      CHECK(e.verdicts().size() == 3);
      CHECK(e.last_candidate().digest() == dreamer->output_digests().back());
    }
    CHECK(dreamer->calls().size() == 3);
    CHECK(critic->calls().size() == 3);
  }
}

TEST_CASE("reflective_generate reports the failing iteration") {
  Fixture f;
  BackendSuite s = f.suite;
  s.dreamer = std::make_shared<RecordingDreamer>(std::make_shared<OracleDreamer>(f.world), 2);
  s.critic = std::make_shared<ScriptedCritic>(std::vector{ReflectionVerdict::revise("Move the tomato vertically upward")});
  try {
    reflective_generate(f.obs.image, "Move the tomato vertically upward", "tomato", s, f.obs, {3});
    FAIL("expected StepError");
  } catch (const StepError& e) {
    CHECK(e.code() == ErrorCode::BackendFailure);
    CHECK(e.index() == 1);
    CHECK(e.cause() != nullptr);
  }
  s.critic = std::make_shared<ScriptedCritic>(std::vector{ReflectionVerdict{Decision::Revise, "", "no prompt"}});
  s.dreamer = std::make_shared<OracleDreamer>(f.world);
  CHECK(code_of([&] { reflective_generate(f.obs.image, "Move the tomato vertically upward", "tomato", s, f.obs); }) ==
        ErrorCode::MalformedResponse);
  CHECK(code_of([&] { reflective_generate(f.obs.image, "Move the tomato vertically upward", "tomato", s, f.obs, {0}); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("oracle critic revises a mismatched candidate and the oracle dreamer honors the retry") {
  Fixture f;
  const std::string subtask = "Move the tomato vertically upward";
  const RgbImage wrong = f.world->observe(oracle_future_scene(f.scene, "Move the tomato to the left")).image;
  const ReflectionVerdict v = f.suite.critic->critique(f.obs.image, wrong, subtask);
  REQUIRE(v.decision == Decision::Revise);
  const RgbImage retried = f.suite.dreamer->dream(f.obs.image, v.revised_prompt);
  CHECK(f.suite.critic->critique(f.obs.image, retried, subtask).decision == Decision::Accept);
}

TEST_CASE("segment_object returns the exact object mask") {
  Fixture f;
  const PixelMask m = segment_object(f.obs.image, "tomato", *f.suite.segmenter);
  const PixelMask truth = mask_for_label(f.obs.seg, f.scene.label_of("tomato"));
  CHECK(m == truth);
  CHECK(m.count() > 0);
  CHECK(code_of([&] { segment_object(f.obs.image, "banana", *f.suite.segmenter); }) == ErrorCode::ObjectNotFound);
}

TEST_CASE("lift_subgoal calibrates metric scale against the shared background") {
  Fixture f;
  const SceneState up = oracle_future_scene(f.scene, "Move the tomato vertically upward");
  const RgbImage img = f.world->observe(up).image;
  const PixelMask mask = segment_object(img, "tomato", *f.suite.segmenter);

  SUBCASE("oracle depth needs no correction") {
    const LiftedSubgoal l = lift_subgoal(img, mask, f.suite, f.obs);
    CHECK(l.scale == doctest::Approx(1.0).epsilon(1e-12));
    // The cloud is exactly the back projection of mask plus shared background.
    const RenderedView view = *f.world->view_for(img);
    PixelMask keep(mask.width, mask.height);
    for (std::size_t i = 0; i < keep.bits.size(); ++i) keep.bits[i] = mask.at(i) || f.obs.seg.ids[i] == 0;
    const PointCloud expected = back_project(view.depth, f.obs.camera, &keep);
    REQUIRE(l.cloud.size() == expected.size());
    std::size_t object_points = 0;
    for (std::size_t i = 0; i < expected.size(); ++i) {
      CHECK((l.cloud.points[i] - expected.points[i]).norm() < 1e-12);
      object_points += (*l.cloud.labels)[i] == 1;
    }
    CHECK(object_points == mask.count());
  }
  SUBCASE("a half-scale estimator is rescaled by two") {
    BackendSuite s = f.suite;
    s.depth_estimator = std::make_shared<ScaledDepth>(f.suite.depth_estimator, 0.5);
    const LiftedSubgoal l = lift_subgoal(img, mask, s, f.obs);
    CHECK(l.scale == doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("any constant factor is undone") {
    Rng rng(4);
    for (int i = 0; i < 10; ++i) {
      const double k = rng.uniform(0.2, 5.0);
      BackendSuite s = f.suite;
      s.depth_estimator = std::make_shared<ScaledDepth>(f.suite.depth_estimator, k);
      const LiftedSubgoal l = lift_subgoal(img, mask, s, f.obs);
      CHECK(l.scale * k == doctest::Approx(1.0).epsilon(1e-9));
      const LiftedSubgoal truth = lift_subgoal(img, mask, f.suite, f.obs);
      for (std::size_t j = 0; j < truth.cloud.size(); j += 97) {
        CHECK((l.cloud.points[j] - truth.cloud.points[j]).norm() < 1e-9);
      }
    }
  }
  SUBCASE("too little shared background") {
    PixelMask everything(mask.width, mask.height);
    std::fill(everything.bits.begin(), everything.bits.end(), 1);
    CHECK(code_of([&] { lift_subgoal(img, everything, f.suite, f.obs); }) == ErrorCode::ScaleCalibrationFailure);
  }
}

TEST_CASE("chain_subgoals") {
  Fixture f;
  const SubtaskPlan plan = plan_subtasks("Put the tomato in the pan", f.obs.image, *f.suite.planner);

  SUBCASE("a single subtask starts from the initial image") {
    auto dreamer = std::make_shared<RecordingDreamer>(std::make_shared<OracleDreamer>(f.world));
    BackendSuite s = f.suite;
    s.dreamer = dreamer;
    SubtaskPlan one{plan.task, {plan.subtasks[0]}, {plan.targets[0]}};
    const auto preds = chain_subgoals(f.obs.image, one, s, f.obs);
    REQUIRE(preds.size() == 1);
    REQUIRE(dreamer->calls().size() == 1);
    CHECK(dreamer->calls()[0].image_digest == f.obs.image.digest());
  }
  SUBCASE("chained predictions equal the cumulative oracle futures") {
    auto dreamer = std::make_shared<RecordingDreamer>(std::make_shared<OracleDreamer>(f.world));
    BackendSuite s = f.suite;
    s.dreamer = dreamer;
    const auto preds = chain_subgoals(f.obs.image, plan, s, f.obs);
    REQUIRE(preds.size() == 3);
    SceneState expected = f.scene;
    for (std::size_t i = 0; i < 3; ++i) {
      expected = oracle_future_scene(expected, plan.subtasks[i]);
      CHECK(preds[i].image == render(expected, f.world->camera()).image);
      CHECK(preds[i].iterations_used == 1);
    }
    // Each dreamer call after the first consumes the previous output.
    const auto calls = dreamer->calls();
    const auto outs = dreamer->output_digests();
    REQUIRE(calls.size() == 3);
    CHECK(calls[0].image_digest == f.obs.image.digest());
    CHECK(calls[1].image_digest == outs[0]);
    CHECK(calls[2].image_digest == outs[1]);

    const SceneState final_scene = *f.world->scene_for(preds.back().image);
    const Vec3 tomato = final_scene.object("tomato").pose.translation;
    const Vec3 pan = final_scene.object("pan").pose.translation;
    CHECK(std::hypot(tomato.x() - pan.x(), tomato.y() - pan.y()) < 0.01);
  }
  SUBCASE("a failure keeps the completed predictions") {
    BackendSuite s = f.suite;
    s.dreamer = std::make_shared<RecordingDreamer>(std::make_shared<OracleDreamer>(f.world), 3);
    try {
      chain_subgoals(f.obs.image, plan, s, f.obs);
      FAIL("expected ChainError");
    } catch (const ChainError& e) {
      CHECK(e.index() == 2);
      CHECK(e.code() == ErrorCode::BackendFailure);
      REQUIRE(e.completed().size() == 2);
      CHECK(e.completed()[1].image == render(oracle_future_scene(oracle_future_scene(f.scene, plan.subtasks[0]),
                                                                 plan.subtasks[1]),
                                             f.world->camera())
                                          .image);
    }
  }
}

TEST_CASE("mock suite needs an extra iteration and recovers the depth scale") {
  Fixture f;
  const BackendSuite s = make_mock_suite(f.world);
  const SubgoalPrediction p = reflective_generate(f.obs.image, "Move the tomato vertically upward", "tomato", s, f.obs);
  CHECK(p.iterations_used == 2);
  CHECK(p.depth_scale == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("incomplete suites are rejected") {
  Fixture f;
  BackendSuite s = f.suite;
  s.critic.reset();
  CHECK(code_of([&] { reflective_generate(f.obs.image, "Move the tomato vertically upward", "tomato", s, f.obs); }) ==
        ErrorCode::ConfigError);
}
