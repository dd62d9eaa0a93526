#include "w4o/mocks.hpp"

#include <algorithm>

#include "w4o/error.hpp"

namespace w4o {

PlanResult ScriptedPlanner::plan(std::string_view, const RgbImage&) {
  std::lock_guard lock(mutex_);
  ++calls_;
  return result_;
}

std::size_t ScriptedPlanner::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

RgbImage RecordingDreamer::dream(const RgbImage& image, std::string_view prompt) {
  std::size_t ordinal = 0;
  {
    std::lock_guard lock(mutex_);
    calls_.push_back({image.digest(), std::string(prompt)});
    ordinal = calls_.size();
  }
  if (fail_on_call_ && *fail_on_call_ == ordinal) {
    throw Error(ErrorCode::BackendFailure, "scripted dreamer failure on call " + std::to_string(ordinal));
  }
  RgbImage out = inner_ ? inner_->dream(image, prompt) : image;
  std::lock_guard lock(mutex_);
  outputs_.push_back(out.digest());
  return out;
}

std::vector<DreamCall> RecordingDreamer::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

std::vector<std::uint64_t> RecordingDreamer::output_digests() const {
  std::lock_guard lock(mutex_);
  return outputs_;
}

ReflectionVerdict ScriptedCritic::critique(const RgbImage& before, const RgbImage& after, std::string_view subtask) {
  std::lock_guard lock(mutex_);
  calls_.push_back({before.digest(), after.digest(), std::string(subtask)});
  if (script_.empty()) return ReflectionVerdict::accept();
  return script_[std::min(calls_.size(), script_.size()) - 1];
}

std::vector<CritiqueCall> ScriptedCritic::calls() const {
  std::lock_guard lock(mutex_);
  return calls_;
}

ReflectionVerdict SkepticalCritic::critique(const RgbImage& before, const RgbImage& after, std::string_view subtask) {
  {
    std::lock_guard lock(mutex_);
    if (std::find(seen_.begin(), seen_.end(), subtask) == seen_.end()) {
      seen_.emplace_back(subtask);
      return ReflectionVerdict::revise(std::string(subtask), "first draft rejected for review");
    }
  }
  return inner_->critique(before, after, subtask);
}

DepthMap ScaledDepth::estimate_depth(const RgbImage& image) {
  DepthMap d = inner_->estimate_depth(image);
  for (std::size_t i = 0; i < d.values.size(); ++i) {
    if (d.valid(i)) d.values[i] *= factor_;
  }
  return d;
}

BackendSuite make_mock_suite(const std::shared_ptr<OracleWorld>& world) {
  BackendSuite suite = make_oracle_suite(world);
  suite.critic = std::make_shared<SkepticalCritic>(suite.critic);
  suite.depth_estimator = std::make_shared<ScaledDepth>(suite.depth_estimator, 0.5);
  return suite;
}

}  // namespace w4o
