#include "w4o/gateway.hpp"

#include <boost/uuid/uuid.hpp>
#include <boost/uuid/uuid_generators.hpp>
#include <boost/uuid/uuid_io.hpp>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <map>
#include <thread>

#include "httplib.h"
#include "w4o/error.hpp"

namespace w4o {

using nlohmann::json;

namespace {

constexpr RequestKind kKinds[] = {RequestKind::Plan, RequestKind::Dream, RequestKind::Critique, RequestKind::Depth,
                                  RequestKind::Segment};

[[noreturn]] void malformed(RequestKind kind, const std::string& why) {
  throw Error(ErrorCode::MalformedResponse, std::string(to_string(kind)) + " response: " + why);
}

void require_string(RequestKind kind, const json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_string()) malformed(kind, std::string("missing string field '") + field + "'");
}

void require_string_array(RequestKind kind, const json& j, const char* field) {
  if (!j.contains(field) || !j[field].is_array()) malformed(kind, std::string("missing array field '") + field + "'");
  for (const auto& e : j[field]) {
    if (!e.is_string()) malformed(kind, std::string("'") + field + "' must hold strings");
  }
}

std::string png_b64(const RgbImage& image) { return base64_encode(encode_png(image)); }

// Decoding failures of payload fields are schema violations of the response.
template <class F>
auto decode_field(RequestKind kind, const char* field, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    malformed(kind, std::string("undecodable '") + field + "': " + e.what());
  }
}

std::chrono::microseconds to_micros(double seconds) {
  return std::chrono::microseconds(static_cast<std::int64_t>(std::llround(seconds * 1e6)));
}

}  // namespace

std::string_view to_string(RequestKind k) {
  switch (k) {
    case RequestKind::Plan: return "plan";
    case RequestKind::Dream: return "dream";
    case RequestKind::Critique: return "critique";
    case RequestKind::Depth: return "depth";
    case RequestKind::Segment: return "segment";
  }
  return "plan";
}

RequestKind request_kind_from_string(std::string_view s) {
  for (auto k : kKinds) {
    if (to_string(k) == s) return k;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown request kind '" + std::string(s) + "'");
}

std::string_view route_for(RequestKind k) {
  switch (k) {
    case RequestKind::Plan: return "/v1/plan";
    case RequestKind::Dream: return "/v1/dream";
    case RequestKind::Critique: return "/v1/critique";
    case RequestKind::Depth: return "/v1/depth";
    case RequestKind::Segment: return "/v1/segment";
  }
  return "/v1/plan";
}

BackendRequest BackendRequest::make(RequestKind kind, json payload) {
  static thread_local boost::uuids::random_generator gen;
  return {boost::uuids::to_string(gen()), kind, std::move(payload)};
}

void BackendRequest::validate() const {
  if (request_id.empty()) throw Error(ErrorCode::InvalidArgument, "request_id must be non-empty");
  if (!payload.is_object()) throw Error(ErrorCode::InvalidArgument, "payload must be an object");
  auto need = [&](const char* f) {
    if (!payload.contains(f) || !payload[f].is_string()) {
      throw Error(ErrorCode::InvalidArgument,
                  std::string(to_string(kind)) + " request needs string field '" + f + "'");
    }
  };
  switch (kind) {
    case RequestKind::Plan: need("task"); need("image_png_b64"); break;
    case RequestKind::Dream: need("image_png_b64"); need("prompt"); break;
    case RequestKind::Critique: need("image_before_b64"); need("image_after_b64"); need("subtask"); break;
    case RequestKind::Depth: need("image_png_b64"); break;
    case RequestKind::Segment: need("image_png_b64"); need("label"); break;
  }
}

void GatewayConfig::validate() const {
  if (base_url.empty()) throw Error(ErrorCode::ConfigError, "gateway base_url is empty");
  if (!(timeout_s > 0)) throw Error(ErrorCode::ConfigError, "gateway timeout must be > 0");
  if (max_retries < 0) throw Error(ErrorCode::ConfigError, "gateway max_retries must be >= 0");
  if (backoff_base_s < 0) throw Error(ErrorCode::ConfigError, "gateway backoff must be >= 0");
}

GatewayConfig GatewayConfig::with_env_override() const {
  GatewayConfig out = *this;
  if (const char* url = std::getenv("W4O_BACKEND_URL"); url && *url) out.base_url = url;
  return out;
}

void validate_response(RequestKind kind, const json& r) {
  if (!r.is_object()) malformed(kind, "not a JSON object");
  switch (kind) {
    case RequestKind::Plan:
      require_string_array(kind, r, "subtasks");
      require_string_array(kind, r, "targets");
      if (r["subtasks"].size() != r["targets"].size()) malformed(kind, "subtasks and targets differ in length");
      break;
    case RequestKind::Dream:
      require_string(kind, r, "image_png_b64");
      break;
    case RequestKind::Critique: {
      require_string(kind, r, "decision");
      const auto d = r["decision"].get<std::string>();
      if (d != "accept" && d != "revise") malformed(kind, "decision must be accept or revise");
      if (r.contains("revised_prompt") && !r["revised_prompt"].is_string()) malformed(kind, "revised_prompt not a string");
      if (r.contains("rationale") && !r["rationale"].is_string()) malformed(kind, "rationale not a string");
      if (d == "revise" && (!r.contains("revised_prompt") || r["revised_prompt"].get<std::string>().empty())) {
        malformed(kind, "revise requires a non-empty revised_prompt");
      }
      break;
    }
    case RequestKind::Depth:
      if (!r.contains("width") || !r["width"].is_number_integer() || r["width"].get<long long>() <= 0 ||
          !r.contains("height") || !r["height"].is_number_integer() || r["height"].get<long long>() <= 0) {
        malformed(kind, "width and height must be positive integers");
      }
      require_string(kind, r, "depth_f32le_b64");
      break;
    case RequestKind::Segment:
      require_string(kind, r, "mask_png_b64");
      break;
  }
}

json call(const GatewayConfig& config, const BackendRequest& request) {
  config.validate();
  request.validate();
  const std::string body = request.payload.dump();
  const std::string route(route_for(request.kind));
  const auto timeout = to_micros(config.timeout_s);

  httplib::Client client(config.base_url);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                                timeout.count() % 1000000);
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(), timeout.count() % 1000000);
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout).count(),
                           timeout.count() % 1000000);
  const httplib::Headers headers{{"X-Request-Id", request.request_id}};

  std::string last_failure;
  bool last_timed_out = false;
  for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(to_micros(config.backoff_base_s * std::ldexp(1.0, attempt - 1)));
    const auto t0 = std::chrono::steady_clock::now();
    auto res = client.Post(route, headers, body, "application/json");
    const auto elapsed = std::chrono::steady_clock::now() - t0;
    if (!res) {
      last_timed_out = res.error() == httplib::Error::ConnectionTimeout ||
                       (res.error() == httplib::Error::Read && elapsed >= timeout * 9 / 10);
      last_failure = last_timed_out ? "timed out after " + std::to_string(config.timeout_s) + " s"
                                    : "transport error: " + httplib::to_string(res.error());
      continue;
    }
    last_timed_out = false;
    if (res->status >= 500) {
      last_failure = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status >= 400) {
      std::string message = res->body;
      const json err = json::parse(res->body, nullptr, false);
      if (err.is_object() && err.contains("error") && err["error"].is_string()) message = err["error"];
      throw Error(ErrorCode::RemoteError, "HTTP " + std::to_string(res->status) + ": " + message);
    }
    if (res->status < 200 || res->status >= 300) {
      throw Error(ErrorCode::MalformedResponse, "unexpected HTTP status " + std::to_string(res->status));
    }
    json doc = json::parse(res->body, nullptr, false);
    if (doc.is_discarded()) malformed(request.kind, "body is not JSON");
    validate_response(request.kind, doc);
    return doc;
  }
  const std::string attempts = std::to_string(config.max_retries + 1) + " attempts";
  if (last_timed_out) throw Error(ErrorCode::Timeout, std::string(route) + " " + last_failure + " (" + attempts + ")");
  throw Error(ErrorCode::RetriesExhausted, std::string(route) + " failed after " + attempts + ": " + last_failure);
}

Gateway::Gateway(GatewayConfig config) : config_(std::move(config)) { config_.validate(); }

json Gateway::call(const BackendRequest& request) {
  if (!config_.single_flight) return w4o::call(config_, request);
  std::lock_guard lock(flight_);
  return w4o::call(config_, request);
}

// ---------------------------------------------------------------------------
// Remote backends

PlanResult RemotePlanner::plan(std::string_view task, const RgbImage& image) {
  const json r = gateway_->call(
      BackendRequest::make(RequestKind::Plan, {{"task", std::string(task)}, {"image_png_b64", png_b64(image)}}));
  return {r["subtasks"].get<std::vector<std::string>>(), r["targets"].get<std::vector<std::string>>()};
}

RgbImage RemoteDreamer::dream(const RgbImage& image, std::string_view prompt) {
  const json r = gateway_->call(
      BackendRequest::make(RequestKind::Dream, {{"image_png_b64", png_b64(image)}, {"prompt", std::string(prompt)}}));
  return decode_field(RequestKind::Dream, "image_png_b64",
                      [&] { return decode_png_rgb(base64_decode(r["image_png_b64"].get<std::string>())); });
}

ReflectionVerdict RemoteCritic::critique(const RgbImage& before, const RgbImage& after, std::string_view subtask) {
  const json r = gateway_->call(BackendRequest::make(
      RequestKind::Critique,
      {{"image_before_b64", png_b64(before)}, {"image_after_b64", png_b64(after)}, {"subtask", std::string(subtask)}}));
  const std::string rationale = r.value("rationale", std::string());
  if (r["decision"] == "accept") {
    ReflectionVerdict v = ReflectionVerdict::accept();
    v.rationale = rationale;
    return v;
  }
  return ReflectionVerdict::revise(r["revised_prompt"].get<std::string>(), rationale);
}

DepthMap RemoteDepth::estimate_depth(const RgbImage& image) {
  const json r = gateway_->call(BackendRequest::make(RequestKind::Depth, {{"image_png_b64", png_b64(image)}}));
  return decode_field(RequestKind::Depth, "depth_f32le_b64", [&] {
    return decode_depth_f32le(base64_decode(r["depth_f32le_b64"].get<std::string>()), r["width"].get<int>(),
                              r["height"].get<int>());
  });
}

PixelMask RemoteSegmenter::segment(const RgbImage& image, std::string_view label) {
  const json r = gateway_->call(
      BackendRequest::make(RequestKind::Segment, {{"image_png_b64", png_b64(image)}, {"label", std::string(label)}}));
  return decode_field(RequestKind::Segment, "mask_png_b64",
                      [&] { return decode_mask_png(base64_decode(r["mask_png_b64"].get<std::string>())); });
}

BackendSuite make_remote_suite(const GatewayConfig& config) {
  auto g = std::make_shared<Gateway>(config.with_env_override());
  BackendSuite s;
  s.planner = std::make_shared<RemotePlanner>(g);
  s.dreamer = std::make_shared<RemoteDreamer>(g);
  s.critic = std::make_shared<RemoteCritic>(g);
  s.depth_estimator = std::make_shared<RemoteDepth>(g);
  s.segmenter = std::make_shared<RemoteSegmenter>(g);
  return s;
}

// ---------------------------------------------------------------------------
// Mock server

MockScript MockScript::from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ConfigError, "mock script must be an object keyed by request kind");
  MockScript script;
  try {
    for (const auto& [key, list] : j.items()) {
      const RequestKind kind = request_kind_from_string(key);
      const json entries = list.is_array() ? list : json::array({list});
      std::vector<MockReply> replies;
      for (const auto& e : entries) {
        MockReply r;
        r.status = e.value("status", 200);
        if (e.contains("body")) r.body = e["body"];
        if (e.contains("echo_fields")) {
          for (const auto& [out, in] : e["echo_fields"].items()) r.echo_fields.emplace_back(out, in.get<std::string>());
        }
        r.delay_ms = e.value("delay_ms", 0);
        if (e.contains("raw")) r.raw = e["raw"].get<std::string>();
        replies.push_back(std::move(r));
      }
      if (replies.empty()) throw Error(ErrorCode::ConfigError, "empty reply list for '" + key + "'");
      script.replies.emplace_back(kind, std::move(replies));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    throw Error(ErrorCode::ConfigError, e.what());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, std::string("mock script: ") + e.what());
  }
  return script;
}

struct MockServer::Impl {
  MockScript script;
  httplib::Server server;
  std::thread thread;
  mutable std::mutex mutex;
  std::vector<RecordedRequest> log;
  std::map<RequestKind, std::size_t> counts;
  std::condition_variable stopped_cv;
  bool stopped = false;

  const MockReply* next_reply(RequestKind kind) {
    for (const auto& [k, replies] : script.replies) {
      if (k != kind) continue;
      const std::size_t n = counts[kind]++;
      return &replies[std::min(n, replies.size() - 1)];
    }
    return nullptr;
  }
};

MockServer::MockServer(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}

MockServer::~MockServer() {
  stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::vector<RecordedRequest> MockServer::requests() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->log;
}

void MockServer::stop() {
  impl_->server.stop();
  std::lock_guard lock(impl_->mutex);
  impl_->stopped = true;
  impl_->stopped_cv.notify_all();
}

void MockServer::wait() {
  std::unique_lock lock(impl_->mutex);
  impl_->stopped_cv.wait(lock, [&] { return impl_->stopped; });
}

std::unique_ptr<MockServer> serve_mock(MockScript script, int port) {
  auto impl = std::make_unique<MockServer::Impl>();
  impl->script = std::move(script);
  MockServer::Impl* raw = impl.get();

  for (auto kind : kKinds) {
    raw->server.Post(std::string(route_for(kind)), [raw, kind](const httplib::Request& req, httplib::Response& res) {
      const MockReply* reply = nullptr;
      {
        std::lock_guard lock(raw->mutex);
        raw->log.push_back({kind, req.get_header_value("X-Request-Id"), req.body});
        reply = raw->next_reply(kind);
      }
      if (!reply) {
        res.status = 404;
        res.set_content(json{{"error", "no script for " + std::string(to_string(kind))}}.dump(), "application/json");
        return;
      }
      if (reply->delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(reply->delay_ms));
      res.status = reply->status;
      if (reply->raw) {
        res.set_content(*reply->raw, "application/json");
        return;
      }
      json body = reply->body;
      if (!reply->echo_fields.empty()) {
        const json in = json::parse(req.body, nullptr, false);
        for (const auto& [out, from] : reply->echo_fields) {
          if (in.is_object() && in.contains(from)) body[out] = in[from];
        }
      }
      res.set_content(body.dump(), "application/json");
    });
  }

  // httplib's default options include SO_REUSEPORT, which would let two servers share a port.
  raw->server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  int bound = -1;
  if (port == 0) {
    bound = raw->server.bind_to_any_port("127.0.0.1");
  } else if (port > 0 && port < 65536 && raw->server.bind_to_port("127.0.0.1", port)) {
    bound = port;
  }
  if (bound <= 0) throw Error(ErrorCode::PortUnavailable, "cannot bind 127.0.0.1:" + std::to_string(port));

  raw->thread = std::thread([raw] { raw->server.listen_after_bind(); });
  raw->server.wait_until_ready();
  std::unique_ptr<MockServer> handle(new MockServer(std::move(impl)));
  handle->port_ = bound;
  return handle;
}

}  // namespace w4o
