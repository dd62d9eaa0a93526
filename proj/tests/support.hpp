#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "w4o/geometry.hpp"
#include "w4o/random.hpp"
#include "w4o/scene.hpp"

namespace w4o::testing {

inline Mat3 random_rotation(Rng& rng) {
  const double a = rng.normal(), b = rng.normal(), c = rng.normal(), d = rng.normal();
  return Eigen::Quaterniond(a, b, c, d).normalized().toRotationMatrix();
}

inline RigidTransform random_transform(Rng& rng, double extent = 1.0) {
  const double x = rng.uniform(-extent, extent);
  const double y = rng.uniform(-extent, extent);
  const double z = rng.uniform(-extent, extent);
  const Mat3 r = random_rotation(rng);
  return {r, Vec3(x, y, z)};
}

inline std::vector<Vec3> random_points(Rng& rng, std::size_t n, double extent = 0.1) {
  std::vector<Vec3> pts;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform(-extent, extent);
    const double y = rng.uniform(-extent, extent);
    const double z = rng.uniform(-extent, extent);
    pts.emplace_back(x, y, z);
  }
  return pts;
}

inline double deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// Table plus the given objects resting where they were placed.
inline SceneState tabletop(std::vector<SceneObject> objects) {
  SceneState s;
  s.table = TableSlab{};
  s.objects = std::move(objects);
  return s;
}

inline SceneObject sphere_on_table(const std::string& id, double r, double x, double y) {
  return {id, Shape::sphere(r), RigidTransform::from_translation(Vec3(x, y, TableSlab{}.height + r)), {200, 40, 40}};
}

inline SceneObject box_on_table(const std::string& id, double sx, double sy, double sz, double x, double y) {
  return {id, Shape::box(sx, sy, sz), RigidTransform::from_translation(Vec3(x, y, TableSlab{}.height + sz / 2)),
          {40, 40, 200}};
}

}  // namespace w4o::testing
