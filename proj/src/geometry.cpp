#include "w4o/geometry.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "w4o/error.hpp"

namespace w4o {

RigidTransform RigidTransform::from_quaternion(const Eigen::Quaterniond& q, const Vec3& t) {
  return {q.normalized().toRotationMatrix(), t};
}

RigidTransform RigidTransform::about_axis(const Vec3& axis, double angle_rad, const Vec3& t) {
  return {Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix(), t};
}

RigidTransform RigidTransform::operator*(const RigidTransform& rhs) const { return compose(*this, rhs); }

Eigen::Quaterniond RigidTransform::quaternion() const {
  Eigen::Quaterniond q(rotation);
  q.normalize();
  if (q.w() < 0) q.coeffs() *= -1.0;
  return q;
}

bool RigidTransform::is_valid(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  const Mat3 gram = rotation.transpose() * rotation;
  if ((gram - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

RigidTransform invert(const RigidTransform& a) {
  const Mat3 rt = a.rotation.transpose();
  return {rt, -(rt * a.translation)};
}

double rotation_angle(const Mat3& r) {
  const Vec3 axis(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  const double sin_theta = 0.5 * axis.norm();
  const double cos_theta = 0.5 * (r.trace() - 1.0);
  return std::atan2(sin_theta, cos_theta);
}

PoseError pose_error(const RigidTransform& a, const RigidTransform& b) {
  PoseError e;
  e.translation = (a.translation - b.translation).norm();
  e.rotation_deg = rotation_angle(a.rotation.transpose() * b.rotation) * 180.0 / std::numbers::pi;
  return e;
}

void CameraModel::validate() const {
  if (!(fx > 0) || !(fy > 0)) throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive");
  if (width <= 0 || height <= 0) throw Error(ErrorCode::InvalidArgument, "image size must be positive");
  if (!(cx >= 0 && cx < width) || !(cy >= 0 && cy < height)) {
    throw Error(ErrorCode::InvalidArgument, "principal point outside the image");
  }
  if (!pose.is_valid()) throw Error(ErrorCode::InvalidArgument, "camera pose is not a proper rigid transform");
}

CameraModel CameraModel::look_at(double fx, double fy, int width, int height, const Vec3& eye, const Vec3& target,
                                 const Vec3& up) {
  const Vec3 z = (target - eye).normalized();
  Vec3 x = z.cross(up);
  if (x.norm() < 1e-12) x = z.cross(Vec3::UnitX());
  x.normalize();
  const Vec3 y = z.cross(x);
  CameraModel cam;
  cam.fx = fx;
  cam.fy = fy;
  cam.width = width;
  cam.height = height;
  cam.cx = width / 2.0;
  cam.cy = height / 2.0;
  cam.pose.rotation.col(0) = x;
  cam.pose.rotation.col(1) = y;
  cam.pose.rotation.col(2) = z;
  cam.pose.translation = eye;
  return cam;
}

ProjectedPoint project(const Vec3& p, const CameraModel& cam) {
  if (!(p.z() > 0)) throw Error(ErrorCode::NonPositiveDepth, "point is not in front of the camera");
  return {cam.fx * p.x() / p.z() + cam.cx, cam.fy * p.y() / p.z() + cam.cy, p.z()};
}

ProjectedPoint project_world(const Vec3& point_world, const CameraModel& cam) {
  return project(invert(cam.pose) * point_world, cam);
}

std::size_t DepthMap::valid_count() const {
  return static_cast<std::size_t>(std::count_if(validity.begin(), validity.end(), [](std::uint8_t b) { return b != 0; }));
}

void DepthMap::validate() const {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (width < 0 || height < 0 || values.size() != n || validity.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "depth buffer size does not match width x height");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (validity[i] && !(std::isfinite(values[i]) && values[i] > 0)) {
      throw Error(ErrorCode::InvalidArgument, "valid depth must be finite and positive");
    }
  }
}

Vec3 PointCloud::centroid() const {
  Vec3 c = Vec3::Zero();
  for (const auto& p : points) c += p;
  return points.empty() ? c : Vec3(c / static_cast<double>(points.size()));
}

void PointCloud::validate() const {
  for (const auto& p : points) {
    if (!p.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite point coordinate");
  }
  if (labels && labels->size() != points.size()) {
    throw Error(ErrorCode::DimensionMismatch, "label count differs from point count");
  }
}

void CorrespondenceSet::validate(std::size_t source_size, std::size_t target_size) const {
  std::unordered_set<std::size_t> seen;
  for (const auto& [s, t] : pairs) {
    if (s >= source_size || t >= target_size) throw Error(ErrorCode::InvalidArgument, "correspondence index out of range");
    if (!seen.insert(s).second) throw Error(ErrorCode::InvalidArgument, "duplicate source index in correspondences");
  }
  if (weights) {
    if (weights->size() != pairs.size()) throw Error(ErrorCode::DimensionMismatch, "weight count differs from pair count");
    for (double w : *weights) {
      if (!(w >= 0) || !std::isfinite(w)) throw Error(ErrorCode::InvalidArgument, "weights must be finite and >= 0");
    }
  }
}

namespace {

template <typename Emit>
void scan_valid_pixels(const DepthMap& depth, const CameraModel& cam, const PixelMask* mask, Emit&& emit) {
  if (depth.width != cam.width || depth.height != cam.height) {
    throw Error(ErrorCode::DimensionMismatch, "depth map does not match camera resolution");
  }
  if (mask && (mask->width != depth.width || mask->height != depth.height)) {
    throw Error(ErrorCode::DimensionMismatch, "mask does not match depth map");
  }
  for (int v = 0; v < depth.height; ++v) {
    for (int u = 0; u < depth.width; ++u) {
      const std::size_t i = depth.index(u, v);
      if (!depth.valid(i) || (mask && !mask->at(i))) continue;
      const double d = depth.values[i];
      const Vec3 p_cam((u - cam.cx) * d / cam.fx, (v - cam.cy) * d / cam.fy, d);
      emit(cam.pose * p_cam, i);
    }
  }
}

}  // namespace

PointCloud back_project(const DepthMap& depth, const CameraModel& cam, const PixelMask* mask) {
  PointCloud cloud;
  scan_valid_pixels(depth, cam, mask, [&](const Vec3& p, std::size_t) { cloud.points.push_back(p); });
  return cloud;
}

PointCloud back_project_labeled(const DepthMap& depth, const CameraModel& cam, const LabelImage& labels,
                                const PixelMask* mask) {
  if (labels.width != depth.width || labels.height != depth.height) {
    throw Error(ErrorCode::DimensionMismatch, "label image does not match depth map");
  }
  PointCloud cloud;
  cloud.labels.emplace();
  scan_valid_pixels(depth, cam, mask, [&](const Vec3& p, std::size_t i) {
    cloud.points.push_back(p);
    cloud.labels->push_back(labels.ids[i]);
  });
  return cloud;
}

Alignment umeyama_align(std::span<const Vec3> src, std::span<const Vec3> dst, bool estimate_scale,
                        std::span<const double> weights) {
  const std::size_t n = src.size();
  if (dst.size() != n) throw Error(ErrorCode::DimensionMismatch, "source and target point counts differ");
  if (!weights.empty() && weights.size() != n) throw Error(ErrorCode::DimensionMismatch, "weight count differs");
  if (n < 3) throw Error(ErrorCode::TooFewPoints, "need at least 3 point pairs, got " + std::to_string(n));

  auto weight = [&](std::size_t i) { return weights.empty() ? 1.0 : weights[i]; };
  double weight_sum = 0.0;
  Vec3 mu_src = Vec3::Zero();
  Vec3 mu_dst = Vec3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weight(i);
    if (!(w >= 0) || !std::isfinite(w)) throw Error(ErrorCode::InvalidArgument, "weights must be finite and >= 0");
    weight_sum += w;
    mu_src += w * src[i];
    mu_dst += w * dst[i];
  }
  if (!(weight_sum > 0)) throw Error(ErrorCode::DegenerateConfiguration, "total weight is zero");
  mu_src /= weight_sum;
  mu_dst /= weight_sum;

  Mat3 cov_src = Mat3::Zero();
  Mat3 cross = Mat3::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weight(i);
    const Vec3 a = src[i] - mu_src;
    cov_src.noalias() += w * a * a.transpose();
    cross.noalias() += w * (dst[i] - mu_dst) * a.transpose();
  }
  cov_src /= weight_sum;
  cross /= weight_sum;

  // Eigenvalues of the PSD source covariance are its singular values (ascending).
  const Eigen::SelfAdjointEigenSolver<Mat3> eig(cov_src, Eigen::EigenvaluesOnly);
  const Vec3 sv = eig.eigenvalues().cwiseMax(0.0);
  if (!(sv(2) > 0) || sv(1) < 1e-9 * sv(2)) {
    throw Error(ErrorCode::DegenerateConfiguration, "source covariance has rank < 2");
  }
  const double var_src = cov_src.trace();

  const Eigen::JacobiSVD<Mat3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3& u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  Mat3 s = Mat3::Identity();
  if (u.determinant() * v.determinant() < 0) s(2, 2) = -1.0;

  Alignment out;
  out.transform.rotation = u * s * v.transpose();
  out.scale = estimate_scale ? (svd.singularValues().asDiagonal() * s).trace() / var_src : 1.0;
  out.transform.translation = mu_dst - out.scale * out.transform.rotation * mu_src;

  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 r = dst[i] - (out.scale * (out.transform.rotation * src[i]) + out.transform.translation);
    sq += weight(i) * r.squaredNorm();
  }
  out.rmse = std::sqrt(sq / weight_sum);
  return out;
}

Alignment umeyama_align(const PointCloud& src, const PointCloud& dst, bool estimate_scale) {
  return umeyama_align(std::span<const Vec3>(src.points), std::span<const Vec3>(dst.points), estimate_scale);
}

double alignment_rmse(std::span<const Vec3> src, std::span<const Vec3> dst, const RigidTransform& t, double scale) {
  if (src.size() != dst.size()) throw Error(ErrorCode::DimensionMismatch, "source and target point counts differ");
  if (src.empty()) return 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) {
    sq += (dst[i] - (scale * (t.rotation * src[i]) + t.translation)).squaredNorm();
  }
  return std::sqrt(sq / static_cast<double>(src.size()));
}

void write_ply(std::ostream& out, const PointCloud& cloud) {
  cloud.validate();
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << cloud.size() << "\n";
  out << "property double x\nproperty double y\nproperty double z\n";
  if (cloud.labels) out << "property uchar label\n";
  out << "end_header\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    out << p.x() << ' ' << p.y() << ' ' << p.z();
    if (cloud.labels) out << ' ' << std::clamp((*cloud.labels)[i], 0, 255);
    out << '\n';
  }
}

void save_ply(const std::string& path, const PointCloud& cloud) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::InvalidArgument, "cannot open " + path);
  write_ply(f, cloud);
}

namespace {

void put_u32le(std::string& out, std::uint32_t x) {
  for (int shift = 0; shift < 32; shift += 8) out.push_back(static_cast<char>((x >> shift) & 0xFF));
}

std::uint32_t get_u32le(std::string_view bytes, std::size_t offset) {
  std::uint32_t x = 0;
  for (int k = 0; k < 4; ++k) x |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[offset + k])) << (8 * k);
  return x;
}

}  // namespace

std::string encode_depth_f32le(const DepthMap& depth) {
  std::string out;
  out.reserve(depth.values.size() * 4);
  for (std::size_t i = 0; i < depth.values.size(); ++i) {
    const float f = depth.valid(i) ? static_cast<float>(depth.values[i]) : 0.0f;
    put_u32le(out, std::bit_cast<std::uint32_t>(f));
  }
  return out;
}

DepthMap decode_depth_f32le(std::string_view bytes, int width, int height) {
  if (width < 0 || height < 0 || bytes.size() != static_cast<std::size_t>(width) * height * 4) {
    throw Error(ErrorCode::DimensionMismatch, "depth payload size does not match width x height");
  }
  DepthMap depth(width, height);
  for (std::size_t i = 0; i < depth.values.size(); ++i) {
    const float f = std::bit_cast<float>(get_u32le(bytes, 4 * i));
    if (std::isfinite(f) && f > 0) {
      depth.values[i] = f;
      depth.validity[i] = 1;
    }
  }
  return depth;
}

void write_depth_bin(std::ostream& out, const DepthMap& depth) {
  std::string header;
  put_u32le(header, static_cast<std::uint32_t>(depth.width));
  put_u32le(header, static_cast<std::uint32_t>(depth.height));
  out << header << encode_depth_f32le(depth);
}

DepthMap read_depth_bin(std::istream& in) {
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 8) throw Error(ErrorCode::DimensionMismatch, "depth file shorter than its header");
  const auto w = get_u32le(bytes, 0);
  const auto h = get_u32le(bytes, 4);
  return decode_depth_f32le(std::string_view(bytes).substr(8), static_cast<int>(w), static_cast<int>(h));
}

}  // namespace w4o
