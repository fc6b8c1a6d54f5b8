#pragma once

#include "immpi/geometry.hpp"
#include "immpi/image.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace immpi {

inline constexpr int kPlaneChannels = 4;  // r, g, b, sigma

/// D x H x W x 4 payload, plane-major.
template <typename T>
struct PlaneStack {
  int width = 0;
  int height = 0;
  int count = 0;
  std::vector<T> values;

  PlaneStack() = default;
  PlaneStack(int w, int h, int d, T fill = T{})
      : width(w), height(h), count(d),
        values(static_cast<std::size_t>(w) * h * d * kPlaneChannels, fill) {}

  std::size_t plane_stride() const { return static_cast<std::size_t>(width) * height * kPlaneChannels; }
  std::size_t index(int plane, int x, int y, int c = 0) const {
    return plane * plane_stride() + (static_cast<std::size_t>(y) * width + x) * kPlaneChannels + c;
  }
  T& at(int plane, int x, int y, int c) { return values[index(plane, x, y, c)]; }
  const T& at(int plane, int x, int y, int c) const { return values[index(plane, x, y, c)]; }
  T* plane(int i) { return values.data() + i * plane_stride(); }
  const T* plane(int i) const { return values.data() + i * plane_stride(); }
};

/// Layered scene anchored in the reference camera frustum.
struct MultiplaneImage {
  Camera reference_camera;
  DepthSampling sampling;
  PlaneStack<float> planes;

  int width() const { return planes.width; }
  int height() const { return planes.height; }
  int plane_count() const { return planes.count; }

  /// Throws InvalidArgument when colors leave [0,1], sigma is negative or
  /// non-finite, or the plane count disagrees with the sampling.
  void validate() const;
};

/// Bilinear footprint of a continuous reference-pixel coordinate.
struct BilinearTap {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;
  double wx = 0.0;  // weight of x1
  double wy = 0.0;  // weight of y1
  bool valid = false;
};

// Coordinates within this distance outside [0, size-1] snap onto the border.
inline constexpr double kBorderTolerance = 1e-6;

inline BilinearTap locate_bilinear(double u, double v, int width, int height) {
  BilinearTap tap;
  if (!(u >= -kBorderTolerance && u <= width - 1 + kBorderTolerance && v >= -kBorderTolerance &&
        v <= height - 1 + kBorderTolerance)) {
    return tap;
  }
  u = std::clamp(u, 0.0, static_cast<double>(width - 1));
  v = std::clamp(v, 0.0, static_cast<double>(height - 1));
  tap.x0 = std::min(static_cast<int>(u), std::max(width - 2, 0));
  tap.y0 = std::min(static_cast<int>(v), std::max(height - 2, 0));
  tap.x1 = std::min(tap.x0 + 1, width - 1);
  tap.y1 = std::min(tap.y0 + 1, height - 1);
  tap.wx = u - tap.x0;
  tap.wy = v - tap.y0;
  tap.valid = true;
  return tap;
}

/// Applies a pixel homography. Returns false for points at or behind the camera.
inline bool map_pixel(const Eigen::Matrix3d& h, double x, double y, double& u, double& v) {
  const double w = h(2, 0) * x + h(2, 1) * y + h(2, 2);
  if (!(w > 0.0)) return false;
  u = (h(0, 0) * x + h(0, 1) * y + h(0, 2)) / w;
  v = (h(1, 0) * x + h(1, 1) * y + h(1, 2)) / w;
  return true;
}

/// Front-to-back over-compositing state for one pixel.
struct RayAccumulator {
  double transmittance = 1.0;
  double r = 0.0, g = 0.0, b = 0.0;
  double depth = 0.0;
  double weight_sum = 0.0;

  // Returns the compositing weight T_i (1 - exp(-sigma delta)).
  double add(double cr, double cg, double cb, double sigma, double delta, double z) {
    const double optical = sigma * delta;
    const double alpha = -std::expm1(-optical);
    const double w = transmittance * alpha;
    r += w * cr;
    g += w * cg;
    b += w * cb;
    depth += w * z;
    weight_sum += w;
    transmittance *= std::exp(-optical);
    return w;
  }
};

/// Per-plane target-to-reference pixel homographies. Errors name the plane.
std::vector<Eigen::Matrix3d> plane_homographies(const Camera& reference,
                                                const DepthSampling& sampling,
                                                const Camera& target);

/// Planes resampled into the target frustum; invalid samples hold zeros.
template <typename T>
struct WarpedStack {
  DepthSampling sampling;
  PlaneStack<T> planes;
  std::vector<std::uint8_t> valid;  // D x H_t x W_t

  bool is_valid(int plane, int x, int y) const {
    return valid[(static_cast<std::size_t>(plane) * planes.height + y) * planes.width + x] != 0;
  }
};

template <typename T>
WarpedStack<T> warp_to_target(const PlaneStack<T>& planes, const Camera& reference,
                              const DepthSampling& sampling, const Camera& target);

WarpedStack<float> warp_to_target(const MultiplaneImage& mpi, const Camera& target);

/// T_1 = 1, T_i = exp(-sum_{j<i} sigma_j delta_j), front-to-back.
std::vector<double> transmittance(std::span<const double> sigmas, std::span<const double> deltas);

struct RenderOptions {
  double single_plane_spacing = kDefaultSinglePlaneSpacing;
};

/// sum_i T_i (1 - exp(-sigma_i delta_i)) C_i with delta measured along target rays.
template <typename T>
ImageT<T> composite_color(const WarpedStack<T>& stack, const Camera& target,
                          const RenderOptions& options = {});

/// sum_i T_i (1 - exp(-sigma_i delta_i)) z_i. Zero where nothing is opaque.
template <typename T>
ImageT<T> composite_depth(const WarpedStack<T>& stack, const Camera& target,
                          const DepthSampling& sampling, const RenderOptions& options = {});

struct RenderOutput {
  Image color;     // H x W x 3
  Image depth;     // H x W x 1
  Image opacity;   // sum of compositing weights
  Image coverage;  // fraction of planes with a valid sample
};

/// Fused warp + composite for the target camera. Parallel over row blocks.
RenderOutput render_novel_view(const MultiplaneImage& mpi, const Camera& target,
                               const RenderOptions& options = {});

/// Composites the stored planes without any warp (reference view only).
RenderOutput composite_reference(const MultiplaneImage& mpi, const RenderOptions& options = {});

/// Per-pixel ray length per unit depth for the given intrinsics.
std::vector<double> ray_length_map(const Intrinsics& intrinsics);

}  // namespace immpi
