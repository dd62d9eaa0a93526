#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "w4o/backends.hpp"
#include "w4o/oracle.hpp"

namespace w4o {

/// Deterministic in-process backends for tests and the `mock` suite. All record their calls.

class ScriptedPlanner final : public PlannerBackend {
 public:
  explicit ScriptedPlanner(PlanResult result) : result_(std::move(result)) {}
  PlanResult plan(std::string_view task, const RgbImage& image) override;
  std::size_t calls() const;

 private:
  PlanResult result_;
  mutable std::mutex mutex_;
  std::size_t calls_ = 0;
};

struct DreamCall {
  std::uint64_t image_digest;
  std::string prompt;
};

/// Forwards to an inner dreamer (or echoes the input when there is none) and records inputs.
/// `fail_on_call` (1-based) makes that call throw BackendFailure.
class RecordingDreamer final : public DreamerBackend {
 public:
  explicit RecordingDreamer(std::shared_ptr<DreamerBackend> inner = nullptr,
                            std::optional<std::size_t> fail_on_call = std::nullopt)
      : inner_(std::move(inner)), fail_on_call_(fail_on_call) {}
  RgbImage dream(const RgbImage& image, std::string_view prompt) override;
  std::vector<DreamCall> calls() const;
  std::vector<std::uint64_t> output_digests() const;

 private:
  std::shared_ptr<DreamerBackend> inner_;
  std::optional<std::size_t> fail_on_call_;
  mutable std::mutex mutex_;
  std::vector<DreamCall> calls_;
  std::vector<std::uint64_t> outputs_;
};

struct CritiqueCall {
  std::uint64_t before_digest;
  std::uint64_t after_digest;
  std::string subtask;
};

/// Replays verdicts in order; the last verdict repeats once the script runs out.
class ScriptedCritic final : public CriticBackend {
 public:
  explicit ScriptedCritic(std::vector<ReflectionVerdict> script) : script_(std::move(script)) {}
  ReflectionVerdict critique(const RgbImage& before, const RgbImage& after, std::string_view subtask) override;
  std::vector<CritiqueCall> calls() const;

 private:
  std::vector<ReflectionVerdict> script_;
  mutable std::mutex mutex_;
  std::vector<CritiqueCall> calls_;
};

/// Rejects the first candidate of every distinct subtask, then defers to the inner critic.
class SkepticalCritic final : public CriticBackend {
 public:
  explicit SkepticalCritic(std::shared_ptr<CriticBackend> inner) : inner_(std::move(inner)) {}
  ReflectionVerdict critique(const RgbImage& before, const RgbImage& after, std::string_view subtask) override;

 private:
  std::shared_ptr<CriticBackend> inner_;
  std::mutex mutex_;
  std::vector<std::string> seen_;
};

/// Multiplies every depth of the inner estimator by a constant factor.
class ScaledDepth final : public DepthBackend {
 public:
  ScaledDepth(std::shared_ptr<DepthBackend> inner, double factor) : inner_(std::move(inner)), factor_(factor) {}
  DepthMap estimate_depth(const RgbImage& image) override;

 private:
  std::shared_ptr<DepthBackend> inner_;
  double factor_;
};

/// The CLI `mock` suite: oracle ground truth behind a skeptical critic and a half-scale depth estimator.
BackendSuite make_mock_suite(const std::shared_ptr<OracleWorld>& world);

}  // namespace w4o
