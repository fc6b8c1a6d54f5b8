#pragma once

#include "immpi/geometry.hpp"
#include "immpi/image.hpp"
#include "immpi/mpi.hpp"
#include "immpi/parameterization.hpp"

#include <vector>

namespace immpi {

/// Reverse-mode renderer for one (reference frustum, target camera) pair.
///
/// Geometry (bilinear taps, ray spacings) is fixed at construction; forward()
/// caches the per-sample values that backward() needs. Same math as
/// render_novel_view, evaluated in double precision.
class ViewRenderer {
 public:
  ViewRenderer(const Camera& reference, const DepthSampling& sampling, const Camera& target,
               const RenderOptions& options = {});

  int width() const { return width_; }
  int height() const { return height_; }

  /// Composited color (H x W x 3) of `planes` seen from the target camera.
  ImageD forward(const PlaneStack<double>& planes);

  /// Accumulates d loss / d planes given d loss / d color. Uses the state of
  /// the most recent forward().
  void backward(const ImageD& grad_color, PlaneStack<double>& grad_planes) const;

 private:
  int ref_width_;
  int ref_height_;
  int width_;
  int height_;
  int planes_;
  std::vector<BilinearTap> taps_;  // planes x pixels
  std::vector<double> deltas_;     // planes x pixels
  std::vector<double> samples_;    // planes x pixels x 4, zero where invalid
  std::vector<double> trans_;      // planes x pixels, T_i
};

/// Gradient of sum(upstream * render(decode(params))) with respect to the
/// parameters: the full backward pass through activations, bilinear warping,
/// transmittance and compositing.
std::vector<double> backward_render(const Parameterization& params, const Camera& reference,
                                    const DepthSampling& sampling, const Camera& target,
                                    const ImageD& upstream, const RenderOptions& options = {});

}  // namespace immpi
