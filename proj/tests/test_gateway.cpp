#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>

#include "support.hpp"
#include "w4o/agents.hpp"
#include "w4o/gateway.hpp"
#include "w4o/oracle.hpp"

using namespace w4o;
using namespace w4o::testing;
using nlohmann::json;

namespace {

GatewayConfig fast_config(const MockServer& server) {
  GatewayConfig c;
  c.base_url = server.url();
  c.timeout_s = 5.0;
  c.backoff_base_s = 0.01;
  return c;
}

MockReply ok(json body) {
  MockReply r;
  r.body = std::move(body);
  return r;
}

MockReply status(int code, json body = json::object()) {
  MockReply r;
  r.status = code;
  r.body = std::move(body);
  return r;
}

MockScript script(RequestKind kind, std::vector<MockReply> replies) {
  MockScript s;
  s.replies.emplace_back(kind, std::move(replies));
  return s;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

const json kPlan = {{"subtasks", {"Move the tomato vertically upward"}}, {"targets", {"tomato"}}};

BackendRequest plan_request() {
  return BackendRequest::make(RequestKind::Plan, {{"task", "Put the tomato in the pan"}, {"image_png_b64", "AA=="}});
}

}  // namespace

TEST_CASE("routes and request ids") {
  CHECK(route_for(RequestKind::Plan) == "/v1/plan");
  CHECK(route_for(RequestKind::Segment) == "/v1/segment");
  CHECK(request_kind_from_string("critique") == RequestKind::Critique);
  CHECK(code_of([] { request_kind_from_string("nope"); }) == ErrorCode::InvalidArgument);
  const BackendRequest a = plan_request();
  const BackendRequest b = plan_request();
  CHECK(a.request_id.size() == 36);
  CHECK(a.request_id[14] == '4');
  CHECK(a.request_id != b.request_id);
  CHECK(code_of([] { BackendRequest::make(RequestKind::Dream, {{"prompt", "x"}}).validate(); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("a successful call sends exactly one request") {
  auto server = serve_mock(script(RequestKind::Plan, {ok(kPlan)}));
  const BackendRequest req = plan_request();
  const json r = call(fast_config(*server), req);
  CHECK(r == kPlan);
  const auto log = server->requests();
  REQUIRE(log.size() == 1);
  CHECK(log[0].kind == RequestKind::Plan);
  CHECK(log[0].request_id == req.request_id);
  CHECK(json::parse(log[0].body) == req.payload);
}

TEST_CASE("server errors are retried with the same body and id") {
  auto server = serve_mock(script(RequestKind::Plan, {status(503), status(503), ok(kPlan)}));
  const BackendRequest req = plan_request();
  CHECK(call(fast_config(*server), req) == kPlan);
  const auto log = server->requests();
  REQUIRE(log.size() == 3);
  for (const auto& r : log) {
    CHECK(r.body == log[0].body);
    CHECK(r.request_id == req.request_id);
  }
}

TEST_CASE("persistent server errors exhaust the retries") {
  auto server = serve_mock(script(RequestKind::Plan, {status(503)}));
  CHECK(code_of([&] { call(fast_config(*server), plan_request()); }) == ErrorCode::RetriesExhausted);
  CHECK(server->requests().size() == 3);
}

TEST_CASE("client errors are not retried") {
  auto server = serve_mock(script(RequestKind::Plan, {status(422, {{"error", "bad task"}})}));
  try {
    call(fast_config(*server), plan_request());
    FAIL("expected RemoteError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::RemoteError);
    CHECK(std::string(e.what()).find("bad task") != std::string::npos);
  }
  CHECK(server->requests().size() == 1);
}

TEST_CASE("malformed responses are rejected") {
  MockReply not_json;
  not_json.raw = "{{{";
  auto server = serve_mock(script(RequestKind::Plan, {not_json, ok({{"subtasks", {"a"}}}), ok({{"subtasks", {"a"}}, {"targets", json::array()}})}));
  const GatewayConfig c = fast_config(*server);
  CHECK(code_of([&] { call(c, plan_request()); }) == ErrorCode::MalformedResponse);
  CHECK(code_of([&] { call(c, plan_request()); }) == ErrorCode::MalformedResponse);
  CHECK(code_of([&] { call(c, plan_request()); }) == ErrorCode::MalformedResponse);

  CHECK_THROWS_AS(validate_response(RequestKind::Critique, {{"decision", "revise"}}), Error);
  CHECK_THROWS_AS(validate_response(RequestKind::Critique, {{"decision", "maybe"}}), Error);
  CHECK_NOTHROW(validate_response(RequestKind::Critique, {{"decision", "accept"}}));
  CHECK_THROWS_AS(validate_response(RequestKind::Depth, {{"width", 0}, {"height", 2}, {"depth_f32le_b64", ""}}), Error);
}

TEST_CASE("a slow backend times out") {
  MockReply slow = ok(kPlan);
  slow.delay_ms = 800;
  auto server = serve_mock(script(RequestKind::Plan, {slow}));
  GatewayConfig c = fast_config(*server);
  c.timeout_s = 0.2;
  c.max_retries = 0;
  CHECK(code_of([&] { call(c, plan_request()); }) == ErrorCode::Timeout);
}

TEST_CASE("unreachable backends exhaust retries") {
  GatewayConfig c;
  c.base_url = "http://127.0.0.1:1";
  c.backoff_base_s = 0.0;
  c.timeout_s = 1.0;
  CHECK(code_of([&] { call(c, plan_request()); }) == ErrorCode::RetriesExhausted);
}

TEST_CASE("remote dreamer returns the echoed image bit-exactly") {
  MockReply echo;
  echo.echo_fields = {{"image_png_b64", "image_png_b64"}};
  auto server = serve_mock(script(RequestKind::Dream, {echo}));
  RemoteDreamer dreamer(std::make_shared<Gateway>(fast_config(*server)));
  RgbImage img(7, 5);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<std::uint8_t>(i * 37);
  CHECK(dreamer.dream(img, "Move the cup to the left") == img);
  const json sent = json::parse(server->requests().at(0).body);
  CHECK(sent["prompt"] == "Move the cup to the left");
}

TEST_CASE("remote critic passes revised prompts through verbatim") {
  const std::string prompt = "Regenerate: keep the pan fixed, move only the tomato \"up\" 15 cm.";
  auto server = serve_mock(script(RequestKind::Critique, {ok({{"decision", "revise"}, {"revised_prompt", prompt}})}));
  RemoteCritic critic(std::make_shared<Gateway>(fast_config(*server)));
  const ReflectionVerdict v = critic.critique(RgbImage(2, 2), RgbImage(2, 2), "Move the tomato vertically upward");
  CHECK(v.decision == Decision::Revise);
  CHECK(v.revised_prompt == prompt);
}

TEST_CASE("remote depth and segmentation decode their payloads") {
  DepthMap d(3, 2);
  d.set(1, 1, 0.75);
  PixelMask m(3, 2);
  m.set(2, 0, true);
  MockScript s;
  s.replies.emplace_back(RequestKind::Depth,
                         std::vector{ok({{"width", 3}, {"height", 2}, {"depth_f32le_b64", base64_encode(encode_depth_f32le(d))}})});
  s.replies.emplace_back(RequestKind::Segment, std::vector{ok({{"mask_png_b64", base64_encode(encode_mask_png(m))}})});
  auto server = serve_mock(std::move(s));
  auto g = std::make_shared<Gateway>(fast_config(*server));
  CHECK(RemoteDepth(g).estimate_depth(RgbImage(3, 2)) == d);
  CHECK(RemoteSegmenter(g).segment(RgbImage(3, 2), "cup") == m);
}

TEST_CASE("a remote reflection loop issues calls in order") {
  const SceneState scene = sample_layout("pick-place", 2);
  auto world = std::make_shared<OracleWorld>(default_camera(scene));
  const Observation obs = world->observation(scene);

  MockReply echo;
  echo.echo_fields = {{"image_png_b64", "image_png_b64"}};
  MockScript s;
  s.replies.emplace_back(RequestKind::Dream, std::vector{echo});
  s.replies.emplace_back(RequestKind::Critique,
                         std::vector{ok({{"decision", "revise"}, {"revised_prompt", "second try"}}),
                                     ok({{"decision", "revise"}, {"revised_prompt", "third try"}}),
                                     ok({{"decision", "accept"}, {"rationale", "fine"}})});
  auto server = serve_mock(std::move(s));
  auto g = std::make_shared<Gateway>(fast_config(*server));

  BackendSuite suite = make_oracle_suite(world);
  suite.dreamer = std::make_shared<RemoteDreamer>(g);
  suite.critic = std::make_shared<RemoteCritic>(g);
  const SubgoalPrediction p =
      reflective_generate(obs.image, "Move the tomato vertically upward", "tomato", suite, obs, {3});
  CHECK(p.iterations_used == 3);
  CHECK(p.verdicts.back().rationale == "fine");

  const auto log = server->requests();
  REQUIRE(log.size() == 6);
  const std::vector<std::string> prompts{"Move the tomato vertically upward", "second try", "third try"};
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(log[2 * i].kind == RequestKind::Dream);
    CHECK(log[2 * i + 1].kind == RequestKind::Critique);
    CHECK(json::parse(log[2 * i].body)["prompt"] == prompts[i]);
    CHECK(json::parse(log[2 * i + 1].body)["subtask"] == "Move the tomato vertically upward");
  }
}

TEST_CASE("unscripted routes answer 404") {
  auto server = serve_mock(script(RequestKind::Plan, {ok(kPlan)}));
  CHECK(code_of([&] { call(fast_config(*server), BackendRequest::make(RequestKind::Depth, {{"image_png_b64", ""}})); }) ==
        ErrorCode::RemoteError);
}

TEST_CASE("mock scripts load from JSON") {
  const json j = json::parse(R"({"plan": {"body": {"subtasks": [], "targets": []}},
                                 "critique": [{"status": 503}, {"body": {"decision": "accept"}}]})");
  const MockScript s = MockScript::from_json(j);
  REQUIRE(s.replies.size() == 2);
  CHECK(code_of([] { MockScript::from_json(json::array()); }) == ErrorCode::ConfigError);
  CHECK(code_of([] { MockScript::from_json(json{{"teleport", json::object()}}); }) == ErrorCode::ConfigError);
}

TEST_CASE("binding a taken port fails") {
  auto first = serve_mock(script(RequestKind::Plan, {ok(kPlan)}));
  CHECK(code_of([&] { serve_mock(script(RequestKind::Plan, {ok(kPlan)}), first->port()); }) ==
        ErrorCode::PortUnavailable);
}

TEST_CASE("gateway configuration") {
  GatewayConfig c;
  CHECK_NOTHROW(c.validate());
  c.timeout_s = 0;
  CHECK(code_of([&] { c.validate(); }) == ErrorCode::ConfigError);

  ::setenv("W4O_BACKEND_URL", "http://example.invalid:9000", 1);
  CHECK(GatewayConfig{}.with_env_override().base_url == "http://example.invalid:9000");
  ::setenv("W4O_BACKEND_URL", "", 1);
  CHECK(GatewayConfig{}.with_env_override().base_url == "http://127.0.0.1:8700");
  ::unsetenv("W4O_BACKEND_URL");
}
