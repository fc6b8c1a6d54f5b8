#include "immpi/synth.hpp"

#include "immpi/errors.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace immpi {

namespace {

constexpr double kNear = 8.0;
constexpr double kFar = 12.0;
constexpr double kRingRadius = 1.0;
constexpr double kOpaqueSigma = 8.0;
constexpr int kGridPlanes = 8;
constexpr double kViewZoom = 1.2;
constexpr double kGoldenFraction = 0.6180339887498949;

double smoothstep(double edge0, double edge1, double x) {
  const double t = std::clamp((x - edge0) / (edge1 - edge0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

struct Rgb {
  double r, g, b;
};

Rgb mix(const Rgb& a, const Rgb& b, double t) {
  return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

// Soft-edged shape used for foreground layers; coordinates in pixels.
struct Blob {
  double cx, cy;
  double rx, ry;  // half extents
  bool disk;
  Rgb color_a, color_b;
  double stripe_freq;
  double stripe_angle;

  // Coverage in [0, 1] with a ~1.5 pixel soft edge.
  double mask(double x, double y) const {
    double dist;
    if (disk) {
      dist = std::hypot((x - cx) / rx, (y - cy) / ry) * std::min(rx, ry) - std::min(rx, ry);
    } else {
      dist = std::max(std::abs(x - cx) - rx, std::abs(y - cy) - ry);
    }
    return 1.0 - smoothstep(-1.5, 1.5, dist);
  }

  Rgb color(double x, double y) const {
    const double s = std::cos(stripe_angle) * (x - cx) + std::sin(stripe_angle) * (y - cy);
    return mix(color_a, color_b, 0.5 + 0.5 * std::sin(stripe_freq * s));
  }
};

Rgb random_color(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.1, 0.9);
  return {u(rng), u(rng), u(rng)};
}

void fill_background(PlaneStack<float>& planes, int plane, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const Rgb c0 = random_color(rng);
  const Rgb c1 = random_color(rng);
  const Rgb c2 = random_color(rng);
  const double cells = 3.0 + std::floor(3.0 * u01(rng));  // checker periods across the image
  const double phase = 2.0 * std::numbers::pi * u01(rng);
  const double wave = 1.0 + 2.0 * u01(rng);
  const int w = planes.width;
  const int h = planes.height;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double u = (x + 0.5) / w;
      const double v = (y + 0.5) / h;
      const Rgb base = mix(c0, c1, 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * wave * (u + 0.6 * v) + phase));
      const double checker = 0.5 + 0.5 * std::tanh(2.5 * std::sin(2.0 * std::numbers::pi * cells * u) *
                                                   std::sin(2.0 * std::numbers::pi * cells * v));
      const Rgb c = mix(base, c2, 0.45 * checker);
      planes.at(plane, x, y, 0) = static_cast<float>(c.r);
      planes.at(plane, x, y, 1) = static_cast<float>(c.g);
      planes.at(plane, x, y, 2) = static_cast<float>(c.b);
      planes.at(plane, x, y, 3) = static_cast<float>(kOpaqueSigma);
    }
  }
}

void fill_foreground(PlaneStack<float>& planes, int plane, std::mt19937_64& rng) {
  const int w = planes.width;
  const int h = planes.height;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const int count = 1 + static_cast<int>(u01(rng) * 2.0);
  std::vector<Blob> blobs;
  for (int i = 0; i < count; ++i) {
    Blob b;
    b.cx = w * (0.2 + 0.6 * u01(rng));
    b.cy = h * (0.2 + 0.6 * u01(rng));
    b.rx = w * (0.08 + 0.1 * u01(rng));
    b.ry = h * (0.08 + 0.1 * u01(rng));
    b.disk = u01(rng) < 0.5;
    b.color_a = random_color(rng);
    b.color_b = random_color(rng);
    b.stripe_freq = 2.0 * std::numbers::pi / (6.0 + 6.0 * u01(rng));
    b.stripe_angle = std::numbers::pi * u01(rng);
    blobs.push_back(b);
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double coverage = 0.0;
      Rgb c{0.0, 0.0, 0.0};
      for (const Blob& b : blobs) {
        const double m = b.mask(x, y);
        if (m > coverage) {
          coverage = m;
          c = b.color(x, y);
        }
      }
      planes.at(plane, x, y, 0) = static_cast<float>(c.r);
      planes.at(plane, x, y, 1) = static_cast<float>(c.g);
      planes.at(plane, x, y, 2) = static_cast<float>(c.b);
      planes.at(plane, x, y, 3) = static_cast<float>(kOpaqueSigma * coverage);
    }
  }
}

}  // namespace

Camera synthetic_camera(int index, int width, int height) {
  Camera cam;
  cam.intrinsics = {static_cast<double>(width), static_cast<double>(width), (width - 1) / 2.0,
                    (height - 1) / 2.0, width, height};
  cam.depth_range = {kNear, kFar};
  if (index == 0) return cam;
  // Other views zoom in slightly so their frusta stay inside the reference
  // frustum over the whole depth range; the MPI then covers every pixel.
  cam.intrinsics.fx *= kViewZoom;
  cam.intrinsics.fy *= kViewZoom;
  // Views 1-4 sit on an outer square; later views fall inside it, so with the
  // default split every held-out view interpolates the training views.
  double angle;
  double radius;
  if (index <= 4) {
    angle = 0.5 * std::numbers::pi * (index - 1);
    radius = kRingRadius;
  } else {
    angle = std::numbers::pi / 4.0 + 2.0 * std::numbers::pi * std::fmod((index - 5) * kGoldenFraction, 1.0);
    radius = 0.5 * kRingRadius;
  }
  const Eigen::Vector3d eye(radius * std::cos(angle), radius * std::sin(angle), 0.0);
  const Eigen::Vector3d look(0.0, 0.0, 0.5 * (kNear + kFar));
  cam.world_to_camera = look_at(eye, look, Eigen::Vector3d(0.0, -1.0, 0.0));
  return cam;
}

SyntheticScene make_scene(const SynthConfig& config) {
  if (config.planes < 1) throw InvalidArgument("synthetic scene needs at least one plane");
  if (config.views < 2) throw InvalidArgument("synthetic scene needs at least two views");
  if (config.train < 1 || config.train > config.views) {
    throw InvalidArgument("train view count must be in [1, views]");
  }
  if (config.width < 2 || config.height < 2) throw InvalidArgument("synthetic scene too small");

  std::mt19937_64 rng(config.seed);
  SyntheticScene out;
  out.seed = config.seed;
  MultiplaneImage& gt = out.ground_truth;
  gt.reference_camera = synthetic_camera(0, config.width, config.height);
  // Layers sit on a subset of the 8-plane inverse-depth grid, spread from back to front.
  const int grid_count = std::max(kGridPlanes, config.planes);
  const DepthSampling grid = sample_inverse_depths(kNear, kFar, grid_count);
  // Walk far-to-near in grid steps; the grid is stored near-to-far.
  for (int i = config.planes - 1; i >= 0; --i) {
    const long step = config.planes == 1 ? 0 : std::lround(static_cast<double>(i) * (grid_count - 1) / (config.planes - 1));
    gt.sampling.depths.push_back(grid.depths[static_cast<std::size_t>(grid_count - 1 - step)]);
  }
  gt.planes = PlaneStack<float>(config.width, config.height, config.planes);
  fill_background(gt.planes, config.planes - 1, rng);
  for (int d = config.planes - 2; d >= 0; --d) fill_foreground(gt.planes, d, rng);

  for (int i = 0; i < config.views; ++i) {
    View view;
    char name[16];
    std::snprintf(name, sizeof(name), "%03d", i);
    view.name = name;
    view.camera = synthetic_camera(i, config.width, config.height);
    view.image = brute_force_render(gt, view.camera).color;
    out.scene.views.push_back(std::move(view));
    (i < config.train ? out.scene.train : out.scene.test).push_back(i);
  }
  return out;
}

BruteForceOutput brute_force_render(const MultiplaneImage& mpi, const Camera& camera,
                                    double single_plane_spacing) {
  const Intrinsics& kt = camera.intrinsics;
  const Intrinsics& kr = mpi.reference_camera.intrinsics;
  const int D = mpi.sampling.count();
  const int sw = mpi.planes.width;
  const int sh = mpi.planes.height;

  // Target-to-reference motion from full 4x4 matrices.
  const Eigen::Matrix4d m =
      mpi.reference_camera.world_to_camera.matrix() * camera.world_to_camera.matrix().inverse();
  const Eigen::Vector3d origin = m.block<3, 1>(0, 3);
  const Eigen::Matrix3d rot = m.block<3, 3>(0, 0);

  std::vector<double> gap(static_cast<std::size_t>(D));
  for (int i = 0; i < D; ++i) {
    if (D == 1) {
      gap[i] = single_plane_spacing;
    } else if (i + 1 < D) {
      gap[i] = mpi.sampling.depths[i + 1] - mpi.sampling.depths[i];
    } else {
      gap[i] = mpi.sampling.depths[i] - mpi.sampling.depths[i - 1];
    }
  }

  auto fetch = [&](int plane, int x, int y, int c) -> double {
    return mpi.planes.values[((static_cast<std::size_t>(plane) * sh + y) * sw + x) * 4 + c];
  };

  BruteForceOutput out{Image(kt.width, kt.height, 3), Image(kt.width, kt.height, 1),
                       Image(kt.width, kt.height, 1)};
  std::vector<double> rgb(static_cast<std::size_t>(D) * 3);
  std::vector<double> optical(static_cast<std::size_t>(D));
  for (int y = 0; y < kt.height; ++y) {
    for (int x = 0; x < kt.width; ++x) {
      const Eigen::Vector3d dir_t((x - kt.cx) / kt.fx, (y - kt.cy) / kt.fy, 1.0);
      const double ray_len = dir_t.norm();
      const Eigen::Vector3d dir = rot * dir_t;
      for (int i = 0; i < D; ++i) {
        rgb[3 * i] = rgb[3 * i + 1] = rgb[3 * i + 2] = 0.0;
        optical[i] = 0.0;
        const double z = mpi.sampling.depths[i];
        if (std::abs(dir.z()) < 1e-15) continue;
        const double s = (z - origin.z()) / dir.z();
        if (!(s > 0.0)) continue;
        const Eigen::Vector3d p = origin + s * dir;
        double u = kr.fx * p.x() / p.z() + kr.cx;
        double v = kr.fy * p.y() / p.z() + kr.cy;
        constexpr double tol = 1e-6;
        if (u < -tol || v < -tol || u > sw - 1 + tol || v > sh - 1 + tol) continue;
        u = std::min(std::max(u, 0.0), sw - 1.0);
        v = std::min(std::max(v, 0.0), sh - 1.0);
        int ix = static_cast<int>(std::floor(u));
        int iy = static_cast<int>(std::floor(v));
        if (ix > sw - 2) ix = std::max(sw - 2, 0);
        if (iy > sh - 2) iy = std::max(sh - 2, 0);
        const int jx = std::min(ix + 1, sw - 1);
        const int jy = std::min(iy + 1, sh - 1);
        const double fx = u - ix;
        const double fy = v - iy;
        double sample[4];
        for (int c = 0; c < 4; ++c) {
          const double top = fetch(i, ix, iy, c) * (1.0 - fx) + fetch(i, jx, iy, c) * fx;
          const double bottom = fetch(i, ix, jy, c) * (1.0 - fx) + fetch(i, jx, jy, c) * fx;
          sample[c] = top * (1.0 - fy) + bottom * fy;
        }
        rgb[3 * i] = sample[0];
        rgb[3 * i + 1] = sample[1];
        rgb[3 * i + 2] = sample[2];
        optical[i] = sample[3] * gap[i] * (D == 1 ? 1.0 : ray_len);
      }
      double color[3] = {0.0, 0.0, 0.0};
      double depth = 0.0;
      double opacity = 0.0;
      double accumulated = 0.0;
      for (int i = 0; i < D; ++i) {
        const double weight = std::exp(-accumulated) * (1.0 - std::exp(-optical[i]));
        for (int c = 0; c < 3; ++c) color[c] += weight * rgb[3 * i + c];
        depth += weight * mpi.sampling.depths[i];
        opacity += weight;
        accumulated += optical[i];
      }
      for (int c = 0; c < 3; ++c) out.color.at(x, y, c) = static_cast<float>(color[c]);
      out.depth.at(x, y) = static_cast<float>(depth);
      out.opacity.at(x, y) = static_cast<float>(opacity);
    }
  }
  return out;
}

}  // namespace immpi
