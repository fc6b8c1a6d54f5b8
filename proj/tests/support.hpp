#pragma once

// Helpers shared by the unit tests and the acceptance binary. The oracles here
// avoid the library's geometry helpers so they can check them.

#include "immpi/diff_render.hpp"
#include "immpi/geometry.hpp"
#include "immpi/loss.hpp"
#include "immpi/mpi.hpp"
#include "immpi/parameterization.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace immpi::testing {

inline Intrinsics simple_intrinsics(int w, int h, double f) {
  return {f, f, (w - 1) / 2.0, (h - 1) / 2.0, w, h};
}

inline Eigen::Matrix3d small_rotation(std::mt19937_64& rng, double max_angle) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::Vector3d axis(u(rng), u(rng), u(rng));
  if (axis.norm() < 1e-6) axis = Eigen::Vector3d::UnitZ();
  return Eigen::AngleAxisd(max_angle * u(rng), axis.normalized()).toRotationMatrix();
}

/// Camera jittered around a base pose: small rotation, translation and focal change.
inline Camera jittered_camera(const Camera& base, std::mt19937_64& rng, double max_angle,
                              double max_shift, double focal_jitter = 0.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Camera cam = base;
  const Eigen::Matrix3d r = small_rotation(rng, max_angle) * base.world_to_camera.rotation();
  const Eigen::Vector3d t = base.world_to_camera.translation() +
                            max_shift * Eigen::Vector3d(u(rng), u(rng), 0.3 * u(rng));
  cam.world_to_camera = RigidTransform(r, t);
  const double scale = 1.0 + focal_jitter * u(rng);
  cam.intrinsics.fx *= scale;
  cam.intrinsics.fy *= scale;
  return cam;
}

/// Reference pixel seen through target pixel `p` on the plane Z_ref = z, found
/// by intersecting the world-space ray with the plane. No homography involved.
inline Eigen::Vector2d transfer_through_plane(const Camera& reference, const Camera& target,
                                              const Eigen::Vector2d& p, double z) {
  const Eigen::Matrix3d rt = target.world_to_camera.rotation();
  const Eigen::Vector3d tt = target.world_to_camera.translation();
  const Eigen::Vector3d center = -rt.transpose() * tt;
  const Intrinsics& kt = target.intrinsics;
  const Eigen::Vector3d dir_cam((p.x() - kt.cx) / kt.fx, (p.y() - kt.cy) / kt.fy, 1.0);
  const Eigen::Vector3d dir = rt.transpose() * dir_cam;
  const Eigen::Matrix3d rr = reference.world_to_camera.rotation();
  const Eigen::Vector3d tr = reference.world_to_camera.translation();
  // Z_ref(center + s dir) = z
  const double z0 = rr.row(2).dot(center) + tr.z();
  const double dz = rr.row(2).dot(dir);
  const double s = (z - z0) / dz;
  const Eigen::Vector3d hit = rr * (center + s * dir) + tr;
  const Intrinsics& kr = reference.intrinsics;
  return {kr.fx * hit.x() / hit.z() + kr.cx, kr.fy * hit.y() / hit.z() + kr.cy};
}

inline Eigen::Vector2d apply_homography(const Eigen::Matrix3d& h, const Eigen::Vector2d& p) {
  const Eigen::Vector3d q = h * Eigen::Vector3d(p.x(), p.y(), 1.0);
  return {q.x() / q.z(), q.y() / q.z()};
}

inline ImageD random_image(int w, int h, int c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ImageD img(w, h, c);
  for (double& v : img.data) v = u(rng);
  return img;
}

/// Scalar objective loss(render(decode(params))) plus sigma TV, and its analytic gradient.
struct RenderObjective {
  Camera reference;
  DepthSampling sampling;
  Camera target;
  std::vector<ImageD> target_pyramid;
  LossWeights weights;

  double value(const Parameterization& params) const {
    const PlaneStack<double> planes = params.decode();
    ViewRenderer renderer(reference, sampling, target);
    const ImageD color = renderer.forward(planes);
    double total = scene_image_loss(color, target_pyramid, weights).terms.total;
    if (params.mode() == ParameterMode::direct) total += sigma_total_variation(planes, weights.tv, nullptr);
    return total;
  }

  std::vector<double> gradient(const Parameterization& params) const {
    Parameterization::Cache cache;
    const PlaneStack<double> planes = params.decode(&cache);
    ViewRenderer renderer(reference, sampling, target);
    const ImageD color = renderer.forward(planes);
    const ImageLoss loss = scene_image_loss(color, target_pyramid, weights);
    PlaneStack<double> grad(planes.width, planes.height, planes.count);
    renderer.backward(loss.gradient, grad);
    if (params.mode() == ParameterMode::direct) sigma_total_variation(planes, weights.tv, &grad);
    return params.decode_backward(grad, cache);
  }
};

struct GradientCheck {
  double relative_error = 0.0;  // ||analytic - numeric|| / max(||analytic||, ||numeric||)
  double gradient_norm = 0.0;
  int coordinates = 0;
};

/// Central differences on `count` random coordinates (all when count <= 0).
template <typename Objective>
GradientCheck check_gradient(const Objective& objective, Parameterization params, int count,
                             std::mt19937_64& rng, double step = 1e-5) {
  const std::vector<double> analytic = objective.gradient(params);
  std::vector<std::size_t> coords(params.values().size());
  for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
  if (count > 0 && static_cast<std::size_t>(count) < coords.size()) {
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(static_cast<std::size_t>(count));
  }
  double diff2 = 0.0;
  double a2 = 0.0;
  double n2 = 0.0;
  for (std::size_t i : coords) {
    const double saved = params.values()[i];
    params.values()[i] = saved + step;
    const double plus = objective.value(params);
    params.values()[i] = saved - step;
    const double minus = objective.value(params);
    params.values()[i] = saved;
    const double numeric = (plus - minus) / (2.0 * step);
    diff2 += (analytic[i] - numeric) * (analytic[i] - numeric);
    a2 += analytic[i] * analytic[i];
    n2 += numeric * numeric;
  }
  GradientCheck out;
  const double scale = std::max(std::sqrt(a2), std::sqrt(n2));
  out.relative_error = scale > 0.0 ? std::sqrt(diff2) / scale : 0.0;
  out.gradient_norm = std::sqrt(a2);
  out.coordinates = static_cast<int>(coords.size());
  return out;
}

/// Seeded gradient-check instance: small image, few planes, a jittered target
/// camera, random parameters and a random target image.
struct GradientInstance {
  RenderObjective objective;
  Parameterization params;
};

inline GradientInstance make_gradient_instance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> size(8, 16);
  std::uniform_int_distribution<int> planes(1, 4);
  const int w = size(rng);
  const int h = size(rng);
  const int d = planes(rng);
  const bool implicit = seed % 4 == 3;

  Camera ref;
  ref.intrinsics = simple_intrinsics(w, h, 1.1 * w);
  ref.depth_range = {4.0, 9.0};
  RenderObjective obj;
  obj.reference = ref;
  obj.sampling = sample_inverse_depths(ref.depth_range.z_near, ref.depth_range.z_far, d);
  obj.target = jittered_camera(ref, rng, 0.03, 0.3);
  obj.target_pyramid = build_pyramid(random_image(w, h, 3, rng), kDefaultPyramidLevels);
  obj.weights.tv = 1e-2;

  std::normal_distribution<double> n(0.0, 1.0);
  if (implicit) {
    GeneratorConfig config;
    config.hidden_layers = 2;
    config.hidden_width = 16;
    Parameterization p = Parameterization::implicit(w, h, d, config, seed);
    return {obj, std::move(p)};
  }
  Parameterization p = Parameterization::direct(w, h, d, 1.0 + (seed % 3));
  for (double& v : p.values()) v = 0.4 * n(rng);
  return {obj, std::move(p)};
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / ("immpi_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace immpi::testing
