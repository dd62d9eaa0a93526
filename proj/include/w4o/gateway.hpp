#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "w4o/backends.hpp"

namespace w4o {

enum class RequestKind { Plan, Dream, Critique, Depth, Segment };
std::string_view to_string(RequestKind k);
RequestKind request_kind_from_string(std::string_view s);  // throws InvalidArgument
std::string_view route_for(RequestKind k);

struct BackendRequest {
  std::string request_id;
  RequestKind kind = RequestKind::Plan;
  nlohmann::json payload;

  /// Fresh random (v4) request id.
  static BackendRequest make(RequestKind kind, nlohmann::json payload);
  void validate() const;
};

struct GatewayConfig {
  std::string base_url = "http://127.0.0.1:8700";
  double timeout_s = 30.0;
  int max_retries = 2;
  double backoff_base_s = 0.5;
  /// Serialize calls through this gateway instance.
  bool single_flight = false;

  void validate() const;
  /// W4O_BACKEND_URL, when set and non-empty, replaces base_url.
  GatewayConfig with_env_override() const;
};

/// Throws MalformedResponse unless `response` matches the response schema for `kind`.
void validate_response(RequestKind kind, const nlohmann::json& response);

/// POST with per-attempt timeout; transport errors and 5xx are retried with the same body and
/// X-Request-Id, sleeping backoff_base * 2^attempt in between.
nlohmann::json call(const GatewayConfig& config, const BackendRequest& request);

class Gateway {
 public:
  explicit Gateway(GatewayConfig config);
  nlohmann::json call(const BackendRequest& request);
  const GatewayConfig& config() const { return config_; }

 private:
  GatewayConfig config_;
  std::mutex flight_;
};

// Remote backends: one per model slot, all sharing a gateway.

class RemotePlanner final : public PlannerBackend {
 public:
  explicit RemotePlanner(std::shared_ptr<Gateway> g) : gateway_(std::move(g)) {}
  PlanResult plan(std::string_view task, const RgbImage& image) override;

 private:
  std::shared_ptr<Gateway> gateway_;
};

class RemoteDreamer final : public DreamerBackend {
 public:
  explicit RemoteDreamer(std::shared_ptr<Gateway> g) : gateway_(std::move(g)) {}
  RgbImage dream(const RgbImage& image, std::string_view prompt) override;

 private:
  std::shared_ptr<Gateway> gateway_;
};

class RemoteCritic final : public CriticBackend {
 public:
  explicit RemoteCritic(std::shared_ptr<Gateway> g) : gateway_(std::move(g)) {}
  ReflectionVerdict critique(const RgbImage& before, const RgbImage& after, std::string_view subtask) override;

 private:
  std::shared_ptr<Gateway> gateway_;
};

class RemoteDepth final : public DepthBackend {
 public:
  explicit RemoteDepth(std::shared_ptr<Gateway> g) : gateway_(std::move(g)) {}
  DepthMap estimate_depth(const RgbImage& image) override;

 private:
  std::shared_ptr<Gateway> gateway_;
};

class RemoteSegmenter final : public SegmenterBackend {
 public:
  explicit RemoteSegmenter(std::shared_ptr<Gateway> g) : gateway_(std::move(g)) {}
  PixelMask segment(const RgbImage& image, std::string_view label) override;

 private:
  std::shared_ptr<Gateway> gateway_;
};

BackendSuite make_remote_suite(const GatewayConfig& config);

// Local mock server

/// One scripted reply. `echo_fields` maps response field -> request field copied verbatim;
/// `raw` replaces the JSON body entirely (for malformed-response tests).
struct MockReply {
  int status = 200;
  nlohmann::json body = nlohmann::json::object();
  std::vector<std::pair<std::string, std::string>> echo_fields;
  int delay_ms = 0;
  std::optional<std::string> raw;
};

/// Per-kind reply lists; the n-th call of a kind gets the n-th reply, the last one repeating.
struct MockScript {
  std::vector<std::pair<RequestKind, std::vector<MockReply>>> replies;

  static MockScript from_json(const nlohmann::json& j);  // throws ConfigError
};

struct RecordedRequest {
  RequestKind kind;
  std::string request_id;
  std::string body;
};

class MockServer {
 public:
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;
  ~MockServer();

  int port() const { return port_; }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  std::vector<RecordedRequest> requests() const;
  void stop();
  /// Blocks until stop() is called from another thread.
  void wait();

 private:
  friend std::unique_ptr<MockServer> serve_mock(MockScript script, int port);
  struct Impl;
  explicit MockServer(std::unique_ptr<Impl> impl);

  std::unique_ptr<Impl> impl_;
  int port_ = 0;
};

/// Port 0 picks any free port. Throws PortUnavailable when the port cannot be bound.
std::unique_ptr<MockServer> serve_mock(MockScript script, int port = 0);

}  // namespace w4o
