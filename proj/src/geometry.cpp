#include "immpi/geometry.hpp"

#include "immpi/errors.hpp"

#include <Eigen/LU>

#include <cmath>
#include <sstream>

namespace immpi {

Eigen::Matrix3d Intrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

Eigen::Matrix3d Intrinsics::inverse() const {
  if (!(std::isfinite(fx) && std::isfinite(fy) && std::abs(fx) > 0.0 && std::abs(fy) > 0.0)) {
    throw InvalidCamera("intrinsics are not invertible (degenerate focal length)");
  }
  Eigen::Matrix3d inv;
  inv << 1.0 / fx, 0.0, -cx / fx, 0.0, 1.0 / fy, -cy / fy, 0.0, 0.0, 1.0;
  return inv;
}

void Intrinsics::validate() const {
  if (!(fx > 0.0 && fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    throw InvalidCamera("focal lengths must be positive and finite");
  }
  if (!std::isfinite(cx) || !std::isfinite(cy)) {
    throw InvalidCamera("principal point must be finite");
  }
  if (width < 1 || height < 1) {
    throw InvalidCamera("image size must be at least 1x1");
  }
}

RigidTransform::RigidTransform()
    : rotation_(Eigen::Matrix3d::Identity()), translation_(Eigen::Vector3d::Zero()) {}

RigidTransform::RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw InvalidCamera("rigid transform has non-finite entries");
  }
  const double orth_err =
      (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (orth_err > kOrthonormalTolerance) {
    std::ostringstream msg;
    msg << "rotation is not orthonormal (max |R^T R - I| = " << orth_err << ")";
    throw InvalidCamera(msg.str());
  }
  if (std::abs(rotation.determinant() - 1.0) > kOrthonormalTolerance) {
    throw InvalidCamera("rotation determinant is not +1");
  }
}

RigidTransform RigidTransform::from_matrix(const Eigen::Matrix4d& m) {
  const Eigen::RowVector4d bottom = m.row(3);
  if ((bottom - Eigen::RowVector4d(0, 0, 0, 1)).cwiseAbs().maxCoeff() > kOrthonormalTolerance) {
    throw InvalidCamera("homogeneous transform bottom row must be [0 0 0 1]");
  }
  return RigidTransform(m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>());
}

Eigen::Matrix4d RigidTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

RigidTransform RigidTransform::inverse() const {
  RigidTransform inv;
  inv.rotation_ = rotation_.transpose();
  inv.translation_ = -(inv.rotation_ * translation_);
  return inv;
}

RigidTransform RigidTransform::operator*(const RigidTransform& rhs) const {
  RigidTransform out;
  out.rotation_ = rotation_ * rhs.rotation_;
  out.translation_ = rotation_ * rhs.translation_ + translation_;
  return out;
}

void Camera::validate() const {
  intrinsics.validate();
  if (!(depth_range.z_near > 0.0) || !(depth_range.z_near < depth_range.z_far) ||
      !std::isfinite(depth_range.z_far)) {
    throw InvalidCamera("depth range must satisfy 0 < z_near < z_far");
  }
}

void DepthSampling::validate() const {
  if (depths.empty()) throw InvalidArgument("depth sampling is empty");
  for (std::size_t i = 0; i < depths.size(); ++i) {
    if (!(depths[i] > 0.0) || !std::isfinite(depths[i])) {
      throw InvalidArgument("plane depths must be positive and finite");
    }
    if (i > 0 && !(depths[i] > depths[i - 1])) {
      throw InvalidArgument("plane depths must be strictly increasing");
    }
  }
}

Eigen::Vector3d backproject(const Eigen::Vector2d& pixel, double depth, const Intrinsics& intrinsics) {
  const Eigen::Vector3d ray = intrinsics.inverse() * Eigen::Vector3d(pixel.x(), pixel.y(), 1.0);
  Eigen::Vector3d out = depth * ray;
  out.z() = depth;
  return out;
}

Eigen::Vector2d project(const Eigen::Vector3d& point, const Intrinsics& intrinsics) {
  const Eigen::Vector3d h = intrinsics.matrix() * point;
  return {h.x() / h.z(), h.y() / h.z()};
}

double ray_length_per_depth(const Eigen::Vector2d& pixel, const Intrinsics& intrinsics) {
  return (intrinsics.inverse() * Eigen::Vector3d(pixel.x(), pixel.y(), 1.0)).norm();
}

RigidTransform relative_transform(const Camera& reference, const Camera& target) {
  return reference.world_to_camera * target.world_to_camera.inverse();
}

Eigen::Matrix3d plane_homography(const Intrinsics& reference, const Intrinsics& target,
                                 const RigidTransform& rel, const Eigen::Vector3d& normal,
                                 double offset) {
  const Eigen::Matrix3d& r = rel.rotation();
  const Eigen::Vector3d& t = rel.translation();
  // Distance from the target camera center (t in reference coordinates) to the plane.
  const double denom = offset - normal.dot(t);
  if (!(std::abs(denom) > 1e-12 * std::max(1.0, std::abs(offset)))) {
    throw DegenerateHomography("plane passes through the target camera center");
  }
  const Eigen::Matrix3d m = r + t * (normal.transpose() * r) / denom;
  return reference.matrix() * m * target.inverse();
}

Eigen::Matrix3d plane_homography(const Camera& reference, const Camera& target,
                                 const RigidTransform& rel, double plane_depth) {
  if (!(plane_depth > 0.0)) throw InvalidArgument("plane depth must be positive");
  return plane_homography(reference.intrinsics, target.intrinsics, rel, Eigen::Vector3d::UnitZ(),
                          plane_depth);
}

DepthSampling sample_inverse_depths(double z_near, double z_far, int count) {
  if (count < 1) throw InvalidArgument("plane count must be at least 1");
  if (!(z_near > 0.0) || !(z_near < z_far) || !std::isfinite(z_far)) {
    throw InvalidArgument("depth range must satisfy 0 < z_near < z_far");
  }
  const double inv_far = 1.0 / z_far;
  const double inv_span = 1.0 / z_near - inv_far;
  DepthSampling sampling;
  sampling.depths.resize(static_cast<std::size_t>(count));
  // Index i = 1..D runs far-to-near; store reversed.
  for (int i = 1; i <= count; ++i) {
    const double inv = inv_far + static_cast<double>(i - 1) / count * inv_span;
    sampling.depths[static_cast<std::size_t>(count - i)] = 1.0 / inv;
  }
  return sampling;
}

std::vector<double> depth_gaps(const DepthSampling& sampling, double single_plane_spacing) {
  const int n = sampling.count();
  std::vector<double> gaps(static_cast<std::size_t>(n));
  if (n == 1) {
    gaps[0] = single_plane_spacing;
    return gaps;
  }
  for (int i = 0; i + 1 < n; ++i) gaps[i] = sampling.depths[i + 1] - sampling.depths[i];
  gaps[n - 1] = gaps[n - 2];
  return gaps;
}

std::vector<double> plane_spacing(const Eigen::Vector2d& pixel, const DepthSampling& sampling,
                                  const Intrinsics& intrinsics, double single_plane_spacing) {
  std::vector<double> deltas = depth_gaps(sampling, single_plane_spacing);
  if (sampling.count() == 1) return deltas;
  const double scale = ray_length_per_depth(pixel, intrinsics);
  for (double& d : deltas) d *= scale;
  return deltas;
}

RigidTransform look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                       const Eigen::Vector3d& up) {
  const Eigen::Vector3d forward = (target - eye).normalized();
  Eigen::Vector3d right = forward.cross(up);
  if (right.norm() < 1e-12) throw InvalidArgument("look_at: up vector parallel to view direction");
  right.normalize();
  const Eigen::Vector3d down = forward.cross(right);
  Eigen::Matrix3d r;
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = forward.transpose();
  return RigidTransform(r, -(r * eye));
}

}  // namespace immpi
