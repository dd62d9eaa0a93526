#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "w4o/geometry.hpp"
#include "w4o/image.hpp"

namespace w4o {

struct PlanResult {
  std::vector<std::string> subtasks;
  /// Object id acted on by each subtask; same length as subtasks.
  std::vector<std::string> targets;
};

enum class Decision { Accept, Revise };

struct ReflectionVerdict {
  Decision decision = Decision::Accept;
  std::string revised_prompt;  // non-empty iff decision == Revise
  std::string rationale;

  static ReflectionVerdict accept(std::string rationale = {}) { return {Decision::Accept, {}, std::move(rationale)}; }
  static ReflectionVerdict revise(std::string prompt, std::string rationale = {}) {
    return {Decision::Revise, std::move(prompt), std::move(rationale)};
  }
  void validate() const;
};

// The five model slots. Implementations must tolerate concurrent calls.

class PlannerBackend {
 public:
  virtual ~PlannerBackend() = default;
  virtual PlanResult plan(std::string_view task, const RgbImage& image) = 0;
};

class DreamerBackend {
 public:
  virtual ~DreamerBackend() = default;
  virtual RgbImage dream(const RgbImage& image, std::string_view prompt) = 0;
};

class CriticBackend {
 public:
  virtual ~CriticBackend() = default;
  virtual ReflectionVerdict critique(const RgbImage& before, const RgbImage& after, std::string_view subtask) = 0;
};

class DepthBackend {
 public:
  virtual ~DepthBackend() = default;
  virtual DepthMap estimate_depth(const RgbImage& image) = 0;
};

class SegmenterBackend {
 public:
  virtual ~SegmenterBackend() = default;
  virtual PixelMask segment(const RgbImage& image, std::string_view label) = 0;
};

struct BackendSuite {
  std::shared_ptr<PlannerBackend> planner;
  std::shared_ptr<DreamerBackend> dreamer;
  std::shared_ptr<CriticBackend> critic;
  std::shared_ptr<DepthBackend> depth_estimator;
  std::shared_ptr<SegmenterBackend> segmenter;

  bool complete() const { return planner && dreamer && critic && depth_estimator && segmenter; }
  void require_complete() const;
};

}  // namespace w4o
