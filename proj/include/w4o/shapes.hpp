#pragma once

#include <optional>
#include <string_view>

#include "w4o/geometry.hpp"

namespace w4o {

enum class ShapeKind { Box, Sphere, Cylinder };

std::string_view to_string(ShapeKind kind);

/// Convex primitive centered at its local origin. Cylinders run along local z.
struct Shape {
  ShapeKind kind = ShapeKind::Box;
  Vec3 half_extents = Vec3::Zero();  // box only
  double radius = 0.0;               // sphere, cylinder
  double half_height = 0.0;          // cylinder

  static Shape box(double sx, double sy, double sz);
  static Shape sphere(double radius);
  static Shape cylinder(double radius, double height);

  void validate() const;

  /// Shape shrunk uniformly by `margin` (erosion by a ball); dimensions clamp at 0.
  Shape eroded(double margin) const;
  double bounding_radius() const;

  Vec3 support_local(const Vec3& dir) const;
  double signed_distance_local(const Vec3& p) const;
  /// Smallest t > 0 with origin + t * dir on the surface.
  std::optional<double> raycast_local(const Vec3& origin, const Vec3& dir) const;

  bool operator==(const Shape&) const = default;
};

struct PosedShape {
  const Shape* shape;
  RigidTransform pose;

  Vec3 support(const Vec3& dir_world) const;
  double signed_distance(const Vec3& p_world) const;
  std::optional<double> raycast(const Vec3& origin_world, const Vec3& dir_world) const;
};

/// Euclidean distance between two convex shapes (GJK); 0 when they overlap.
double convex_distance(const PosedShape& a, const PosedShape& b);

/// True when the shapes overlap by more than `tolerance` (both eroded by tolerance / 2).
bool penetrates(const PosedShape& a, const PosedShape& b, double tolerance);

}  // namespace w4o
