#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <vector>

namespace immpi {

/// Pinhole intrinsics. Pixel centers sit on integer coordinates.
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  Eigen::Matrix3d matrix() const;
  /// Closed-form inverse of matrix(). Throws InvalidCamera when degenerate.
  Eigen::Matrix3d inverse() const;
  void validate() const;

  bool operator==(const Intrinsics&) const = default;
};

/// Proper rigid motion p -> R p + t.
class RigidTransform {
 public:
  static constexpr double kOrthonormalTolerance = 1e-6;

  RigidTransform();
  /// Throws InvalidCamera unless `rotation` is orthonormal with det +1.
  RigidTransform(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  static RigidTransform identity() { return {}; }
  /// Reads the top 3x4 block of a homogeneous matrix; the bottom row must be [0 0 0 1].
  static RigidTransform from_matrix(const Eigen::Matrix4d& m);

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }
  Eigen::Matrix4d matrix() const;

  RigidTransform inverse() const;
  /// (a * b)(p) == a(b(p))
  RigidTransform operator*(const RigidTransform& rhs) const;
  Eigen::Vector3d operator()(const Eigen::Vector3d& p) const { return rotation_ * p + translation_; }

  bool operator==(const RigidTransform&) const = default;

 private:
  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
};

struct DepthRange {
  double z_near = 1.0;
  double z_far = 2.0;
  bool operator==(const DepthRange&) const = default;
};

struct Camera {
  Intrinsics intrinsics;
  RigidTransform world_to_camera;
  DepthRange depth_range;

  void validate() const;
  bool operator==(const Camera&) const = default;
};

/// Plane depths stored near-to-far.
struct DepthSampling {
  std::vector<double> depths;

  int count() const { return static_cast<int>(depths.size()); }
  double nearest() const { return depths.front(); }
  double farthest() const { return depths.back(); }
  void validate() const;
};

inline constexpr int kDefaultPlaneCount = 32;
// Spacing used for a lone plane, where consecutive-plane distance is undefined.
inline constexpr double kDefaultSinglePlaneSpacing = 1.0;

/// z * K^-1 [x, y, 1]^T. The returned Z equals `depth` exactly.
Eigen::Vector3d backproject(const Eigen::Vector2d& pixel, double depth, const Intrinsics& intrinsics);

/// Perspective division through K. Requires point.z() != 0.
Eigen::Vector2d project(const Eigen::Vector3d& point, const Intrinsics& intrinsics);

/// ||K^-1 [x, y, 1]^T||: path length per unit of camera-space depth along the pixel ray.
double ray_length_per_depth(const Eigen::Vector2d& pixel, const Intrinsics& intrinsics);

/// Maps target-camera coordinates into reference-camera coordinates.
RigidTransform relative_transform(const Camera& reference, const Camera& target);

/// Homography taking homogeneous target pixels to reference pixels through the
/// fronto-parallel plane Z = plane_depth of the reference frame.
///
/// With rel = (R, t) mapping target to reference coordinates and n = [0, 0, 1]:
///   H = K_ref (R + t n^T R / (z - n^T t)) K_tgt^-1
/// i.e. the inverse of the reference-to-target plane homography
/// K_tgt R^T (I - t n^T / z) K_ref^-1. Throws DegenerateHomography when the
/// plane contains the target camera center.
Eigen::Matrix3d plane_homography(const Camera& reference, const Camera& target,
                                 const RigidTransform& rel, double plane_depth);

/// General-plane variant: plane n^T X = offset expressed in reference coordinates.
Eigen::Matrix3d plane_homography(const Intrinsics& reference, const Intrinsics& target,
                                 const RigidTransform& rel, const Eigen::Vector3d& normal,
                                 double offset);

/// Planes evenly spaced in inverse depth, from 1/z_far up to (but excluding)
/// 1/z_near, returned near-to-far.
DepthSampling sample_inverse_depths(double z_near, double z_far, int count);

/// Per-plane ray length between consecutive planes at `pixel`; the last plane
/// reuses the previous gap and a single plane gets `single_plane_spacing`.
std::vector<double> plane_spacing(const Eigen::Vector2d& pixel, const DepthSampling& sampling,
                                  const Intrinsics& intrinsics,
                                  double single_plane_spacing = kDefaultSinglePlaneSpacing);

/// Depth gaps z_{i+1} - z_i with the same last-plane and single-plane rules;
/// multiply by ray_length_per_depth to get plane_spacing.
std::vector<double> depth_gaps(const DepthSampling& sampling,
                               double single_plane_spacing = kDefaultSinglePlaneSpacing);

/// Rotation that looks from `eye` toward `target` (camera +z forward, +y down in image).
/// Returned as a world-to-camera transform.
RigidTransform look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                       const Eigen::Vector3d& up);

}  // namespace immpi
