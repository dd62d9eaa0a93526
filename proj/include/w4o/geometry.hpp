#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "w4o/image.hpp"

namespace w4o {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Proper rigid motion x -> rotation * x + translation.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }
  static RigidTransform from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }
  static RigidTransform from_rotation(const Mat3& r) { return {r, Vec3::Zero()}; }
  /// Quaternion is normalized before conversion.
  static RigidTransform from_quaternion(const Eigen::Quaterniond& q, const Vec3& t);
  static RigidTransform about_axis(const Vec3& axis, double angle_rad, const Vec3& t = Vec3::Zero());

  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }
  RigidTransform operator*(const RigidTransform& rhs) const;

  /// Unit quaternion with w >= 0.
  Eigen::Quaterniond quaternion() const;

  bool is_valid(double tol = 1e-9) const;

  bool operator==(const RigidTransform& rhs) const {
    return rotation == rhs.rotation && translation == rhs.translation;
  }
};

/// Applies b first, then a.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform invert(const RigidTransform& a);

/// Geodesic angle of a rotation matrix in radians; accurate near 0 and pi.
double rotation_angle(const Mat3& r);

struct PoseError {
  double translation = 0.0;    // meters
  double rotation_deg = 0.0;   // degrees
};

PoseError pose_error(const RigidTransform& a, const RigidTransform& b);

/// Pinhole camera, +z forward, +x right, +y down. Pose maps camera frame to world.
struct CameraModel {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;
  RigidTransform pose;

  void validate() const;

  /// Camera at `eye` looking at `target`, with image "up" as close to `up` as possible.
  static CameraModel look_at(double fx, double fy, int width, int height, const Vec3& eye,
                             const Vec3& target, const Vec3& up = Vec3::UnitZ());
};

struct ProjectedPoint {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

ProjectedPoint project(const Vec3& point_cam, const CameraModel& cam);
ProjectedPoint project_world(const Vec3& point_world, const CameraModel& cam);

/// Metric depth image. Depth is camera-frame z, not ray length.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;
  std::vector<std::uint8_t> validity;

  DepthMap() = default;
  DepthMap(int w, int h)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0.0),
        validity(static_cast<std::size_t>(w) * h, 0) {}

  std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * width + u; }
  bool valid(int u, int v) const { return validity[index(u, v)] != 0; }
  bool valid(std::size_t i) const { return validity[i] != 0; }
  double at(int u, int v) const { return values[index(u, v)]; }
  void set(int u, int v, double d) {
    values[index(u, v)] = d;
    validity[index(u, v)] = 1;
  }
  void invalidate(int u, int v) {
    values[index(u, v)] = 0.0;
    validity[index(u, v)] = 0;
  }
  std::size_t valid_count() const;

  void validate() const;

  friend bool operator==(const DepthMap&, const DepthMap&) = default;
};

struct PointCloud {
  std::vector<Vec3> points;
  std::optional<std::vector<int>> labels;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  Vec3 centroid() const;
  void validate() const;
};

struct CorrespondenceSet {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::optional<std::vector<double>> weights;

  std::size_t size() const { return pairs.size(); }
  void validate(std::size_t source_size, std::size_t target_size) const;
};

/// Lifts valid (and masked-in) pixels to world points in row-major scan order.
PointCloud back_project(const DepthMap& depth, const CameraModel& cam, const PixelMask* mask = nullptr);
/// As back_project, attaching the label of each source pixel.
PointCloud back_project_labeled(const DepthMap& depth, const CameraModel& cam, const LabelImage& labels,
                                const PixelMask* mask = nullptr);

struct Alignment {
  RigidTransform transform;
  double scale = 1.0;
  double rmse = 0.0;
};

/// Weighted least-squares similarity/rigid fit of dst ~ scale * R * src + t over index-aligned pairs.
/// Empty weights means uniform.
Alignment umeyama_align(std::span<const Vec3> src, std::span<const Vec3> dst, bool estimate_scale = false,
                        std::span<const double> weights = {});
Alignment umeyama_align(const PointCloud& src, const PointCloud& dst, bool estimate_scale = false);

/// Root-mean-square of dst_i - (scale * T * src_i).
double alignment_rmse(std::span<const Vec3> src, std::span<const Vec3> dst, const RigidTransform& t,
                      double scale = 1.0);

// ASCII PLY with optional uchar label property.
void write_ply(std::ostream& out, const PointCloud& cloud);
void save_ply(const std::string& path, const PointCloud& cloud);

// Binary depth: u32 LE width, u32 LE height, then float32 LE row-major; invalid pixels stored as 0.
std::string encode_depth_f32le(const DepthMap& depth);
DepthMap decode_depth_f32le(std::string_view bytes, int width, int height);
void write_depth_bin(std::ostream& out, const DepthMap& depth);
DepthMap read_depth_bin(std::istream& in);

}  // namespace w4o
