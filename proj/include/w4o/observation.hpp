#pragma once

#include "w4o/geometry.hpp"
#include "w4o/image.hpp"
#include "w4o/scene.hpp"

namespace w4o {

/// One camera view: image, metric depth, labeled world-frame cloud, and id map.
struct Observation {
  RgbImage image;
  DepthMap depth;
  PointCloud cloud;
  LabelImage seg;
  CameraModel camera;
};

inline Observation make_observation(RenderedView view, const CameraModel& camera) {
  Observation obs;
  obs.cloud = back_project_labeled(view.depth, camera, view.seg);
  obs.image = std::move(view.image);
  obs.depth = std::move(view.depth);
  obs.seg = std::move(view.seg);
  obs.camera = camera;
  return obs;
}

}  // namespace w4o
