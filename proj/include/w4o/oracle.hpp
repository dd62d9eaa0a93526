#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <unordered_map>

#include "w4o/backends.hpp"
#include "w4o/observation.hpp"
#include "w4o/scene.hpp"

namespace w4o {

/// Ground-truth registry behind the oracle backends: every image the episode renders
/// is recorded with the scene that produced it, so oracles can answer from truth.
class OracleWorld {
 public:
  explicit OracleWorld(CameraModel camera) : camera_(std::move(camera)) {}

  const CameraModel& camera() const { return camera_; }

  /// Renders the scene and registers the result.
  RenderedView observe(const SceneState& scene);
  Observation observation(const SceneState& scene) { return make_observation(observe(scene), camera_); }

  std::optional<SceneState> scene_for(const RgbImage& image) const;
  std::optional<RenderedView> view_for(const RgbImage& image) const;

 private:
  struct Entry {
    SceneState scene;
    RenderedView view;
  };

  CameraModel camera_;
  mutable std::mutex mutex_;
  std::unordered_map<std::uint64_t, Entry> entries_;
};

class OraclePlanner final : public PlannerBackend {
 public:
  PlanResult plan(std::string_view task, const RgbImage& image) override;
};

/// Renders the oracle future scene for the prompt, starting from the scene behind the input image.
class OracleDreamer final : public DreamerBackend {
 public:
  explicit OracleDreamer(std::shared_ptr<OracleWorld> world) : world_(std::move(world)) {}
  RgbImage dream(const RgbImage& image, std::string_view prompt) override;

 private:
  std::shared_ptr<OracleWorld> world_;
};

/// Accepts iff the moved object's pose in the candidate is within tolerance of the oracle future.
class OracleCritic final : public CriticBackend {
 public:
  explicit OracleCritic(std::shared_ptr<OracleWorld> world, double position_tol = 0.02, double rotation_tol_deg = 10.0)
      : world_(std::move(world)), position_tol_(position_tol), rotation_tol_deg_(rotation_tol_deg) {}
  ReflectionVerdict critique(const RgbImage& before, const RgbImage& after, std::string_view subtask) override;

 private:
  std::shared_ptr<OracleWorld> world_;
  double position_tol_;
  double rotation_tol_deg_;
};

class OracleDepth final : public DepthBackend {
 public:
  explicit OracleDepth(std::shared_ptr<OracleWorld> world) : world_(std::move(world)) {}
  DepthMap estimate_depth(const RgbImage& image) override;

 private:
  std::shared_ptr<OracleWorld> world_;
};

class OracleSegmenter final : public SegmenterBackend {
 public:
  explicit OracleSegmenter(std::shared_ptr<OracleWorld> world) : world_(std::move(world)) {}
  PixelMask segment(const RgbImage& image, std::string_view label) override;

 private:
  std::shared_ptr<OracleWorld> world_;
};

BackendSuite make_oracle_suite(const std::shared_ptr<OracleWorld>& world);

}  // namespace w4o
