#include "immpi/mpi.hpp"

#include "immpi/errors.hpp"
#include "immpi/parallel.hpp"

#include <cmath>
#include <sstream>

namespace immpi {

void MultiplaneImage::validate() const {
  reference_camera.validate();
  sampling.validate();
  if (planes.count != sampling.count()) {
    throw InvalidArgument("plane count does not match depth sampling");
  }
  if (planes.width != reference_camera.intrinsics.width ||
      planes.height != reference_camera.intrinsics.height) {
    throw InvalidArgument("plane size does not match reference intrinsics");
  }
  if (planes.values.size() != planes.plane_stride() * planes.count) {
    throw InvalidArgument("plane payload has the wrong size");
  }
  for (std::size_t i = 0; i < planes.values.size(); i += kPlaneChannels) {
    for (int c = 0; c < 3; ++c) {
      const float v = planes.values[i + c];
      if (!(v >= 0.0f && v <= 1.0f)) throw InvalidArgument("plane color outside [0, 1]");
    }
    const float sigma = planes.values[i + 3];
    if (!(sigma >= 0.0f) || !std::isfinite(sigma)) {
      throw InvalidArgument("plane density must be finite and non-negative");
    }
  }
}

std::vector<Eigen::Matrix3d> plane_homographies(const Camera& reference,
                                                const DepthSampling& sampling,
                                                const Camera& target) {
  const RigidTransform rel = relative_transform(reference, target);
  std::vector<Eigen::Matrix3d> out;
  out.reserve(sampling.depths.size());
  for (int i = 0; i < sampling.count(); ++i) {
    try {
      out.push_back(plane_homography(reference, target, rel, sampling.depths[i]));
    } catch (const DegenerateHomography& e) {
      std::ostringstream msg;
      msg << "plane " << i << " (z = " << sampling.depths[i] << "): " << e.what();
      throw DegenerateHomography(msg.str(), i);
    }
  }
  return out;
}

std::vector<double> ray_length_map(const Intrinsics& intrinsics) {
  const Eigen::Matrix3d k_inv = intrinsics.inverse();
  std::vector<double> out(static_cast<std::size_t>(intrinsics.width) * intrinsics.height);
  for (int y = 0; y < intrinsics.height; ++y) {
    for (int x = 0; x < intrinsics.width; ++x) {
      out[static_cast<std::size_t>(y) * intrinsics.width + x] =
          (k_inv * Eigen::Vector3d(x, y, 1.0)).norm();
    }
  }
  return out;
}

template <typename T>
WarpedStack<T> warp_to_target(const PlaneStack<T>& planes, const Camera& reference,
                              const DepthSampling& sampling, const Camera& target) {
  const auto homs = plane_homographies(reference, sampling, target);
  const int tw = target.intrinsics.width;
  const int th = target.intrinsics.height;
  WarpedStack<T> out;
  out.sampling = sampling;
  out.planes = PlaneStack<T>(tw, th, planes.count);
  out.valid.assign(static_cast<std::size_t>(tw) * th * planes.count, 0);
  for (int i = 0; i < planes.count; ++i) {
    const T* src = planes.plane(i);
    T* dst = out.planes.plane(i);
    for (int y = 0; y < th; ++y) {
      for (int x = 0; x < tw; ++x) {
        double u = 0.0, v = 0.0;
        if (!map_pixel(homs[i], x, y, u, v)) continue;
        const BilinearTap tap = locate_bilinear(u, v, planes.width, planes.height);
        if (!tap.valid) continue;
        const std::size_t p00 = (static_cast<std::size_t>(tap.y0) * planes.width + tap.x0) * kPlaneChannels;
        const std::size_t p01 = (static_cast<std::size_t>(tap.y0) * planes.width + tap.x1) * kPlaneChannels;
        const std::size_t p10 = (static_cast<std::size_t>(tap.y1) * planes.width + tap.x0) * kPlaneChannels;
        const std::size_t p11 = (static_cast<std::size_t>(tap.y1) * planes.width + tap.x1) * kPlaneChannels;
        const double w00 = (1.0 - tap.wx) * (1.0 - tap.wy);
        const double w01 = tap.wx * (1.0 - tap.wy);
        const double w10 = (1.0 - tap.wx) * tap.wy;
        const double w11 = tap.wx * tap.wy;
        T* o = dst + (static_cast<std::size_t>(y) * tw + x) * kPlaneChannels;
        for (int c = 0; c < kPlaneChannels; ++c) {
          o[c] = static_cast<T>(w00 * src[p00 + c] + w01 * src[p01 + c] + w10 * src[p10 + c] +
                                w11 * src[p11 + c]);
        }
        out.valid[(static_cast<std::size_t>(i) * th + y) * tw + x] = 1;
      }
    }
  }
  return out;
}

template WarpedStack<float> warp_to_target(const PlaneStack<float>&, const Camera&,
                                           const DepthSampling&, const Camera&);
template WarpedStack<double> warp_to_target(const PlaneStack<double>&, const Camera&,
                                            const DepthSampling&, const Camera&);

WarpedStack<float> warp_to_target(const MultiplaneImage& mpi, const Camera& target) {
  return warp_to_target(mpi.planes, mpi.reference_camera, mpi.sampling, target);
}

std::vector<double> transmittance(std::span<const double> sigmas, std::span<const double> deltas) {
  if (sigmas.size() != deltas.size()) throw InvalidArgument("sigma/delta length mismatch");
  std::vector<double> out(sigmas.size());
  double optical = 0.0;
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    out[i] = std::exp(-optical);
    optical += sigmas[i] * deltas[i];
  }
  return out;
}

namespace {

template <typename T, typename Emit>
void composite_stack(const WarpedStack<T>& stack, const Camera& target, const RenderOptions& options,
                     Emit&& emit) {
  const int w = stack.planes.width;
  const int h = stack.planes.height;
  if (w != target.intrinsics.width || h != target.intrinsics.height) {
    throw InvalidArgument("warped stack does not match target camera size");
  }
  const std::vector<double> gaps = depth_gaps(stack.sampling, options.single_plane_spacing);
  const std::vector<double> ray_len = ray_length_map(target.intrinsics);
  const bool single = stack.sampling.count() == 1;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t pix = static_cast<std::size_t>(y) * w + x;
      RayAccumulator acc;
      for (int i = 0; i < stack.planes.count; ++i) {
        const T* s = stack.planes.plane(i) + pix * kPlaneChannels;
        const double delta = single ? gaps[i] : gaps[i] * ray_len[pix];
        acc.add(s[0], s[1], s[2], s[3], delta, stack.sampling.depths[i]);
      }
      emit(x, y, acc);
    }
  }
}

}  // namespace

template <typename T>
ImageT<T> composite_color(const WarpedStack<T>& stack, const Camera& target,
                          const RenderOptions& options) {
  ImageT<T> out(stack.planes.width, stack.planes.height, 3);
  composite_stack(stack, target, options, [&](int x, int y, const RayAccumulator& acc) {
    out.at(x, y, 0) = static_cast<T>(acc.r);
    out.at(x, y, 1) = static_cast<T>(acc.g);
    out.at(x, y, 2) = static_cast<T>(acc.b);
  });
  return out;
}

template <typename T>
ImageT<T> composite_depth(const WarpedStack<T>& stack, const Camera& target,
                          const DepthSampling& sampling, const RenderOptions& options) {
  if (sampling.depths != stack.sampling.depths) {
    throw InvalidArgument("depth sampling does not match the warped stack");
  }
  ImageT<T> out(stack.planes.width, stack.planes.height, 1);
  composite_stack(stack, target, options, [&](int x, int y, const RayAccumulator& acc) {
    out.at(x, y) = static_cast<T>(acc.depth);
  });
  return out;
}

template ImageT<float> composite_color(const WarpedStack<float>&, const Camera&, const RenderOptions&);
template ImageT<double> composite_color(const WarpedStack<double>&, const Camera&, const RenderOptions&);
template ImageT<float> composite_depth(const WarpedStack<float>&, const Camera&, const DepthSampling&,
                                       const RenderOptions&);
template ImageT<double> composite_depth(const WarpedStack<double>&, const Camera&,
                                        const DepthSampling&, const RenderOptions&);

namespace {

RenderOutput allocate_output(int w, int h) {
  RenderOutput out;
  out.color = Image(w, h, 3);
  out.depth = Image(w, h, 1);
  out.opacity = Image(w, h, 1);
  out.coverage = Image(w, h, 1);
  return out;
}

}  // namespace

RenderOutput render_novel_view(const MultiplaneImage& mpi, const Camera& target,
                               const RenderOptions& options) {
  target.validate();
  const auto homs = plane_homographies(mpi.reference_camera, mpi.sampling, target);
  const int tw = target.intrinsics.width;
  const int th = target.intrinsics.height;
  const int sw = mpi.width();
  const int sh = mpi.height();
  const int planes = mpi.plane_count();
  const std::vector<double> gaps = depth_gaps(mpi.sampling, options.single_plane_spacing);
  const std::vector<double> ray_len = ray_length_map(target.intrinsics);
  const bool single = planes == 1;
  RenderOutput out = allocate_output(tw, th);

  parallel_for(th, [&](int row_begin, int row_end) {
    const std::size_t n = static_cast<std::size_t>(row_end - row_begin) * tw;
    std::vector<RayAccumulator> acc(n);
    std::vector<int> valid_count(n, 0);
    for (int i = 0; i < planes; ++i) {
      const Eigen::Matrix3d& hm = homs[i];
      const float* src = mpi.planes.plane(i);
      const double z = mpi.sampling.depths[i];
      for (int y = row_begin; y < row_end; ++y) {
        // Homogeneous coordinates are affine along a row.
        double hx = hm(0, 1) * y + hm(0, 2);
        double hy = hm(1, 1) * y + hm(1, 2);
        double hw = hm(2, 1) * y + hm(2, 2);
        for (int x = 0; x < tw; ++x, hx += hm(0, 0), hy += hm(1, 0), hw += hm(2, 0)) {
          if (!(hw > 0.0)) continue;
          const BilinearTap tap = locate_bilinear(hx / hw, hy / hw, sw, sh);
          if (!tap.valid) continue;
          const float* p00 = src + (static_cast<std::size_t>(tap.y0) * sw + tap.x0) * kPlaneChannels;
          const float* p01 = src + (static_cast<std::size_t>(tap.y0) * sw + tap.x1) * kPlaneChannels;
          const float* p10 = src + (static_cast<std::size_t>(tap.y1) * sw + tap.x0) * kPlaneChannels;
          const float* p11 = src + (static_cast<std::size_t>(tap.y1) * sw + tap.x1) * kPlaneChannels;
          const double w00 = (1.0 - tap.wx) * (1.0 - tap.wy);
          const double w01 = tap.wx * (1.0 - tap.wy);
          const double w10 = (1.0 - tap.wx) * tap.wy;
          const double w11 = tap.wx * tap.wy;
          double s[kPlaneChannels];
          for (int c = 0; c < kPlaneChannels; ++c) {
            s[c] = w00 * p00[c] + w01 * p01[c] + w10 * p10[c] + w11 * p11[c];
          }
          const std::size_t pix = static_cast<std::size_t>(y) * tw + x;
          const std::size_t local = static_cast<std::size_t>(y - row_begin) * tw + x;
          const double delta = single ? gaps[i] : gaps[i] * ray_len[pix];
          acc[local].add(s[0], s[1], s[2], s[3], delta, z);
          ++valid_count[local];
        }
      }
    }
    for (int y = row_begin; y < row_end; ++y) {
      for (int x = 0; x < tw; ++x) {
        const std::size_t local = static_cast<std::size_t>(y - row_begin) * tw + x;
        const RayAccumulator& a = acc[local];
        out.color.at(x, y, 0) = static_cast<float>(a.r);
        out.color.at(x, y, 1) = static_cast<float>(a.g);
        out.color.at(x, y, 2) = static_cast<float>(a.b);
        out.depth.at(x, y) = static_cast<float>(a.depth);
        out.opacity.at(x, y) = static_cast<float>(a.weight_sum);
        out.coverage.at(x, y) = static_cast<float>(static_cast<double>(valid_count[local]) / planes);
      }
    }
  });
  return out;
}

RenderOutput composite_reference(const MultiplaneImage& mpi, const RenderOptions& options) {
  const Camera& cam = mpi.reference_camera;
  const int w = mpi.width();
  const int h = mpi.height();
  const std::vector<double> gaps = depth_gaps(mpi.sampling, options.single_plane_spacing);
  const std::vector<double> ray_len = ray_length_map(cam.intrinsics);
  const bool single = mpi.plane_count() == 1;
  RenderOutput out = allocate_output(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t pix = static_cast<std::size_t>(y) * w + x;
      RayAccumulator acc;
      for (int i = 0; i < mpi.plane_count(); ++i) {
        const float* s = mpi.planes.plane(i) + pix * kPlaneChannels;
        const double delta = single ? gaps[i] : gaps[i] * ray_len[pix];
        acc.add(s[0], s[1], s[2], s[3], delta, mpi.sampling.depths[i]);
      }
      out.color.at(x, y, 0) = static_cast<float>(acc.r);
      out.color.at(x, y, 1) = static_cast<float>(acc.g);
      out.color.at(x, y, 2) = static_cast<float>(acc.b);
      out.depth.at(x, y) = static_cast<float>(acc.depth);
      out.opacity.at(x, y) = static_cast<float>(acc.weight_sum);
      out.coverage.at(x, y) = 1.0f;
    }
  }
  return out;
}

}  // namespace immpi
