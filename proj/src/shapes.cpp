#include "w4o/shapes.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "w4o/error.hpp"

namespace w4o {

std::string_view to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::Box: return "box";
    case ShapeKind::Sphere: return "sphere";
    case ShapeKind::Cylinder: return "cylinder";
  }
  return "unknown";
}

Shape Shape::box(double sx, double sy, double sz) {
  Shape s;
  s.kind = ShapeKind::Box;
  s.half_extents = Vec3(sx, sy, sz) / 2.0;
  return s;
}

Shape Shape::sphere(double radius) {
  Shape s;
  s.kind = ShapeKind::Sphere;
  s.radius = radius;
  return s;
}

Shape Shape::cylinder(double radius, double height) {
  Shape s;
  s.kind = ShapeKind::Cylinder;
  s.radius = radius;
  s.half_height = height / 2.0;
  return s;
}

void Shape::validate() const {
  bool ok = true;
  switch (kind) {
    case ShapeKind::Box: ok = (half_extents.array() > 0).all() && half_extents.allFinite(); break;
    case ShapeKind::Sphere: ok = radius > 0 && std::isfinite(radius); break;
    case ShapeKind::Cylinder:
      ok = radius > 0 && half_height > 0 && std::isfinite(radius) && std::isfinite(half_height);
      break;
  }
  if (!ok) throw Error(ErrorCode::InvalidArgument, "shape dimensions must be positive");
}

Shape Shape::eroded(double margin) const {
  Shape s = *this;
  s.half_extents = (half_extents.array() - margin).cwiseMax(0.0);
  s.radius = std::max(0.0, radius - margin);
  s.half_height = std::max(0.0, half_height - margin);
  return s;
}

double Shape::bounding_radius() const {
  switch (kind) {
    case ShapeKind::Box: return half_extents.norm();
    case ShapeKind::Sphere: return radius;
    case ShapeKind::Cylinder: return std::hypot(radius, half_height);
  }
  return 0.0;
}

Vec3 Shape::support_local(const Vec3& dir) const {
  switch (kind) {
    case ShapeKind::Box:
      return {std::copysign(half_extents.x(), dir.x()), std::copysign(half_extents.y(), dir.y()),
              std::copysign(half_extents.z(), dir.z())};
    case ShapeKind::Sphere: {
      const double n = dir.norm();
      return n > 0 ? Vec3(radius * dir / n) : Vec3(radius, 0, 0);
    }
    case ShapeKind::Cylinder: {
      const double rho = std::hypot(dir.x(), dir.y());
      Vec3 p(0, 0, std::copysign(half_height, dir.z()));
      if (rho > 0) {
        p.x() = radius * dir.x() / rho;
        p.y() = radius * dir.y() / rho;
      }
      return p;
    }
  }
  return Vec3::Zero();
}

double Shape::signed_distance_local(const Vec3& p) const {
  switch (kind) {
    case ShapeKind::Box: {
      const Vec3 q = p.cwiseAbs() - half_extents;
      return q.cwiseMax(0.0).norm() + std::min(q.maxCoeff(), 0.0);
    }
    case ShapeKind::Sphere: return p.norm() - radius;
    case ShapeKind::Cylinder: {
      const double dx = std::hypot(p.x(), p.y()) - radius;
      const double dz = std::abs(p.z()) - half_height;
      return std::min(std::max(dx, dz), 0.0) + std::hypot(std::max(dx, 0.0), std::max(dz, 0.0));
    }
  }
  return 0.0;
}

std::optional<double> Shape::raycast_local(const Vec3& o, const Vec3& d) const {
  constexpr double kMinT = 1e-12;
  std::optional<double> best;
  auto consider = [&](double t) {
    if (t > kMinT && (!best || t < *best)) best = t;
  };
  switch (kind) {
    case ShapeKind::Sphere: {
      const double a = d.squaredNorm();
      const double b = o.dot(d);
      const double c = o.squaredNorm() - radius * radius;
      const double disc = b * b - a * c;
      if (disc < 0) return std::nullopt;
      const double s = std::sqrt(disc);
      consider((-b - s) / a);
      if (!best) consider((-b + s) / a);
      return best;
    }
    case ShapeKind::Box: {
      double t_near = -std::numeric_limits<double>::infinity();
      double t_far = std::numeric_limits<double>::infinity();
      for (int k = 0; k < 3; ++k) {
        if (d[k] == 0.0) {
          if (std::abs(o[k]) > half_extents[k]) return std::nullopt;
          continue;
        }
        double t1 = (-half_extents[k] - o[k]) / d[k];
        double t2 = (half_extents[k] - o[k]) / d[k];
        if (t1 > t2) std::swap(t1, t2);
        t_near = std::max(t_near, t1);
        t_far = std::min(t_far, t2);
      }
      if (t_near > t_far) return std::nullopt;
      consider(t_near);
      if (!best) consider(t_far);
      return best;
    }
    case ShapeKind::Cylinder: {
      const double a = d.x() * d.x() + d.y() * d.y();
      if (a > 0) {
        const double b = o.x() * d.x() + o.y() * d.y();
        const double c = o.x() * o.x() + o.y() * o.y() - radius * radius;
        const double disc = b * b - a * c;
        if (disc >= 0) {
          const double s = std::sqrt(disc);
          for (double t : {(-b - s) / a, (-b + s) / a}) {
            if (std::abs(o.z() + t * d.z()) <= half_height) consider(t);
          }
        }
      }
      if (d.z() != 0.0) {
        for (double zc : {-half_height, half_height}) {
          const double t = (zc - o.z()) / d.z();
          const double x = o.x() + t * d.x();
          const double y = o.y() + t * d.y();
          if (x * x + y * y <= radius * radius) consider(t);
        }
      }
      return best;
    }
  }
  return std::nullopt;
}

Vec3 PosedShape::support(const Vec3& dir_world) const {
  return pose * shape->support_local(pose.rotation.transpose() * dir_world);
}

double PosedShape::signed_distance(const Vec3& p_world) const {
  return shape->signed_distance_local(pose.rotation.transpose() * (p_world - pose.translation));
}

std::optional<double> PosedShape::raycast(const Vec3& origin_world, const Vec3& dir_world) const {
  const Mat3 rt = pose.rotation.transpose();
  return shape->raycast_local(rt * (origin_world - pose.translation), rt * dir_world);
}

namespace {

struct Simplex {
  std::array<Vec3, 4> p;
  int n = 0;
};

Vec3 closest_on_segment(Simplex& s) {
  const Vec3 a = s.p[0];
  const Vec3 b = s.p[1];
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0 ? -a.dot(ab) / len2 : 0.0;
  if (t <= 0) {
    s.n = 1;
    return a;
  }
  if (t >= 1) {
    s.p[0] = b;
    s.n = 1;
    return b;
  }
  return a + t * ab;
}

// Closest point of triangle (a, b, c) to the origin; reduces the simplex to the supporting feature.
Vec3 closest_on_triangle(const Vec3& a, const Vec3& b, const Vec3& c, Simplex& out) {
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = -a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) {
    out.p[0] = a;
    out.n = 1;
    return a;
  }
  const Vec3 bp = -b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) {
    out.p[0] = b;
    out.n = 1;
    return b;
  }
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) {
    const double v = d1 / (d1 - d3);
    out.p[0] = a;
    out.p[1] = b;
    out.n = 2;
    return a + v * ab;
  }
  const Vec3 cp = -c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) {
    out.p[0] = c;
    out.n = 1;
    return c;
  }
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) {
    const double w = d2 / (d2 - d6);
    out.p[0] = a;
    out.p[1] = c;
    out.n = 2;
    return a + w * ac;
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    out.p[0] = b;
    out.p[1] = c;
    out.n = 2;
    return b + w * (c - b);
  }
  const double denom = 1.0 / (va + vb + vc);
  out.p[0] = a;
  out.p[1] = b;
  out.p[2] = c;
  out.n = 3;
  return a + ab * (vb * denom) + ac * (vc * denom);
}

// Returns nullopt when the origin lies inside the tetrahedron.
std::optional<Vec3> closest_on_tetrahedron(Simplex& s) {
  const auto& p = s.p;
  const std::array<std::array<int, 4>, 4> faces{{{0, 1, 2, 3}, {0, 2, 3, 1}, {0, 3, 1, 2}, {1, 3, 2, 0}}};
  std::optional<Vec3> best;
  Simplex best_simplex;
  for (const auto& f : faces) {
    const Vec3 nrm = (p[f[1]] - p[f[0]]).cross(p[f[2]] - p[f[0]]);
    const double sign_origin = (-p[f[0]]).dot(nrm);
    const double sign_opposite = (p[f[3]] - p[f[0]]).dot(nrm);
    const bool flat = std::abs(sign_opposite) <= 1e-18 * std::max(1.0, nrm.squaredNorm());
    if (!(flat || sign_origin * sign_opposite < 0)) continue;
    Simplex candidate;
    const Vec3 q = closest_on_triangle(p[f[0]], p[f[1]], p[f[2]], candidate);
    if (!best || q.squaredNorm() < best->squaredNorm()) {
      best = q;
      best_simplex = candidate;
    }
  }
  if (best) s = best_simplex;
  return best;
}

}  // namespace

double convex_distance(const PosedShape& a, const PosedShape& b) {
  auto support = [&](const Vec3& d) { return Vec3(a.support(d) - b.support(-d)); };
  Vec3 dir = a.pose.translation - b.pose.translation;
  if (dir.squaredNorm() == 0) dir = Vec3::UnitX();

  Simplex s;
  s.p[0] = support(dir);
  s.n = 1;
  Vec3 v = s.p[0];
  for (int iter = 0; iter < 128; ++iter) {
    const double vv = v.squaredNorm();
    if (vv <= 1e-24) return 0.0;
    const Vec3 w = support(-v);
    if (vv - v.dot(w) <= 1e-12 * vv) break;
    bool duplicate = false;
    for (int k = 0; k < s.n; ++k) duplicate = duplicate || (s.p[k] - w).squaredNorm() <= 1e-24;
    if (duplicate) break;
    s.p[s.n++] = w;
    switch (s.n) {
      case 2: v = closest_on_segment(s); break;
      case 3: {
        const Simplex tri = s;
        v = closest_on_triangle(tri.p[0], tri.p[1], tri.p[2], s);
        break;
      }
      case 4: {
        const auto q = closest_on_tetrahedron(s);
        if (!q) return 0.0;
        v = *q;
        break;
      }
      default: break;
    }
  }
  return v.norm();
}

bool penetrates(const PosedShape& a, const PosedShape& b, double tolerance) {
  const double margin = tolerance / 2.0;
  const Shape ea = a.shape->eroded(margin);
  const Shape eb = b.shape->eroded(margin);
  const double reach = ea.bounding_radius() + eb.bounding_radius();
  if ((a.pose.translation - b.pose.translation).norm() > reach) return false;
  return convex_distance({&ea, a.pose}, {&eb, b.pose}) <= 1e-12;
}

}  // namespace w4o
