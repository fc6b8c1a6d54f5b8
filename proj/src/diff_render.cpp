#include "immpi/diff_render.hpp"

#include "immpi/errors.hpp"

#include <cmath>

namespace immpi {

ViewRenderer::ViewRenderer(const Camera& reference, const DepthSampling& sampling,
                           const Camera& target, const RenderOptions& options)
    : ref_width_(reference.intrinsics.width),
      ref_height_(reference.intrinsics.height),
      width_(target.intrinsics.width),
      height_(target.intrinsics.height),
      planes_(sampling.count()) {
  const auto homs = plane_homographies(reference, sampling, target);
  const std::vector<double> gaps = depth_gaps(sampling, options.single_plane_spacing);
  const std::vector<double> ray_len = ray_length_map(target.intrinsics);
  const std::size_t pixels = static_cast<std::size_t>(width_) * height_;
  taps_.resize(pixels * planes_);
  deltas_.resize(pixels * planes_);
  for (int i = 0; i < planes_; ++i) {
    for (int y = 0; y < height_; ++y) {
      for (int x = 0; x < width_; ++x) {
        const std::size_t pix = static_cast<std::size_t>(y) * width_ + x;
        double u = 0.0, v = 0.0;
        BilinearTap& tap = taps_[i * pixels + pix];
        if (map_pixel(homs[i], x, y, u, v)) tap = locate_bilinear(u, v, ref_width_, ref_height_);
        deltas_[i * pixels + pix] = planes_ == 1 ? gaps[i] : gaps[i] * ray_len[pix];
      }
    }
  }
}

ImageD ViewRenderer::forward(const PlaneStack<double>& planes) {
  if (planes.width != ref_width_ || planes.height != ref_height_ || planes.count != planes_) {
    throw InvalidArgument("ViewRenderer: plane stack does not match the reference frustum");
  }
  const std::size_t pixels = static_cast<std::size_t>(width_) * height_;
  samples_.assign(pixels * planes_ * kPlaneChannels, 0.0);
  trans_.assign(pixels * planes_, 0.0);
  ImageD color(width_, height_, 3);
  for (std::size_t pix = 0; pix < pixels; ++pix) {
    double t = 1.0;
    double acc[3] = {0.0, 0.0, 0.0};
    for (int i = 0; i < planes_; ++i) {
      const std::size_t k = i * pixels + pix;
      trans_[k] = t;
      const BilinearTap& tap = taps_[k];
      if (!tap.valid) continue;
      const double* src = planes.plane(i);
      const double* p00 = src + (static_cast<std::size_t>(tap.y0) * ref_width_ + tap.x0) * kPlaneChannels;
      const double* p01 = src + (static_cast<std::size_t>(tap.y0) * ref_width_ + tap.x1) * kPlaneChannels;
      const double* p10 = src + (static_cast<std::size_t>(tap.y1) * ref_width_ + tap.x0) * kPlaneChannels;
      const double* p11 = src + (static_cast<std::size_t>(tap.y1) * ref_width_ + tap.x1) * kPlaneChannels;
      const double w00 = (1.0 - tap.wx) * (1.0 - tap.wy);
      const double w01 = tap.wx * (1.0 - tap.wy);
      const double w10 = (1.0 - tap.wx) * tap.wy;
      const double w11 = tap.wx * tap.wy;
      double* s = samples_.data() + k * kPlaneChannels;
      for (int c = 0; c < kPlaneChannels; ++c) {
        s[c] = w00 * p00[c] + w01 * p01[c] + w10 * p10[c] + w11 * p11[c];
      }
      const double optical = s[3] * deltas_[k];
      const double w = t * -std::expm1(-optical);
      for (int c = 0; c < 3; ++c) acc[c] += w * s[c];
      t *= std::exp(-optical);
    }
    for (int c = 0; c < 3; ++c) color.data[pix * 3 + c] = acc[c];
  }
  return color;
}

void ViewRenderer::backward(const ImageD& grad_color, PlaneStack<double>& grad_planes) const {
  if (grad_color.width != width_ || grad_color.height != height_ || grad_color.channels != 3) {
    throw InvalidArgument("ViewRenderer: gradient image does not match the target size");
  }
  if (grad_planes.width != ref_width_ || grad_planes.height != ref_height_ ||
      grad_planes.count != planes_) {
    throw InvalidArgument("ViewRenderer: gradient stack does not match the reference frustum");
  }
  if (samples_.empty()) throw InvalidArgument("ViewRenderer: backward() before forward()");
  const std::size_t pixels = static_cast<std::size_t>(width_) * height_;
  for (std::size_t pix = 0; pix < pixels; ++pix) {
    const double* g = grad_color.data.data() + pix * 3;
    // Suffix sum of w_j <g, C_j> over planes behind the current one.
    double behind = 0.0;
    for (int i = planes_ - 1; i >= 0; --i) {
      const std::size_t k = i * pixels + pix;
      const BilinearTap& tap = taps_[k];
      if (!tap.valid) continue;
      const double* s = samples_.data() + k * kPlaneChannels;
      const double delta = deltas_[k];
      const double optical = s[3] * delta;
      const double t = trans_[k];
      const double t_next = t * std::exp(-optical);
      const double w = t * -std::expm1(-optical);
      const double dot = g[0] * s[0] + g[1] * s[1] + g[2] * s[2];
      // d I / d alpha_i = T_{i+1} C_i - sum_{j>i} w_j C_j
      const double d_optical = t_next * dot - behind;
      behind += w * dot;
      const double ds[kPlaneChannels] = {w * g[0], w * g[1], w * g[2], d_optical * delta};

      const double w00 = (1.0 - tap.wx) * (1.0 - tap.wy);
      const double w01 = tap.wx * (1.0 - tap.wy);
      const double w10 = (1.0 - tap.wx) * tap.wy;
      const double w11 = tap.wx * tap.wy;
      double* dst = grad_planes.plane(i);
      double* p00 = dst + (static_cast<std::size_t>(tap.y0) * ref_width_ + tap.x0) * kPlaneChannels;
      double* p01 = dst + (static_cast<std::size_t>(tap.y0) * ref_width_ + tap.x1) * kPlaneChannels;
      double* p10 = dst + (static_cast<std::size_t>(tap.y1) * ref_width_ + tap.x0) * kPlaneChannels;
      double* p11 = dst + (static_cast<std::size_t>(tap.y1) * ref_width_ + tap.x1) * kPlaneChannels;
      for (int c = 0; c < kPlaneChannels; ++c) {
        p00[c] += w00 * ds[c];
        p01[c] += w01 * ds[c];
        p10[c] += w10 * ds[c];
        p11[c] += w11 * ds[c];
      }
    }
  }
}

std::vector<double> backward_render(const Parameterization& params, const Camera& reference,
                                    const DepthSampling& sampling, const Camera& target,
                                    const ImageD& upstream, const RenderOptions& options) {
  Parameterization::Cache cache;
  const PlaneStack<double> planes = params.decode(&cache);
  ViewRenderer renderer(reference, sampling, target, options);
  renderer.forward(planes);
  PlaneStack<double> grad_planes(planes.width, planes.height, planes.count);
  renderer.backward(upstream, grad_planes);
  return params.decode_backward(grad_planes, cache);
}

}  // namespace immpi
