#pragma once

#include "immpi/image.hpp"
#include "immpi/mpi.hpp"

#include <vector>

namespace immpi {

/// lambda1/lambda2 weight the L1/SSIM terms of the prior-style loss; beta1..3
/// weight L1/SSIM/LPIPS in the per-scene loss. LPIPS is not available, so
/// beta3 must stay 0.
struct LossWeights {
  double lambda1 = 2.0;
  double lambda2 = 1.0;
  double beta1 = 2.0;
  double beta2 = 1.0;
  double beta3 = 0.0;
  double tv = 1e-4;

  void validate() const;
};

inline constexpr int kDefaultPyramidLevels = 4;

struct LossTerms {
  double total = 0.0;
  double l1 = 0.0;    // weighted, summed over scales
  double ssim = 0.0;  // weighted (1 - SSIM), summed over scales
  double tv = 0.0;    // weighted
};

/// Level 0 is the input; each further level is a 2x2 box downsample. Stops
/// early when a level would drop below 1 pixel.
std::vector<ImageD> build_pyramid(const ImageD& image, int levels);

struct PyramidLoss {
  LossTerms terms;
  std::vector<ImageD> gradients;  // d loss / d rendered[s]
};

/// sum_s l1_weight * mean|r_s - t_s| + ssim_weight * (1 - SSIM(r_s, t_s)).
/// Levels smaller than the SSIM window contribute their L1 term only.
PyramidLoss pyramid_loss(const std::vector<ImageD>& rendered, const std::vector<ImageD>& target,
                         double l1_weight, double ssim_weight);

/// Per-scene loss (beta weights) on pyramids.
PyramidLoss scene_loss(const std::vector<ImageD>& rendered, const std::vector<ImageD>& target,
                       const LossWeights& weights);

/// Prior-style loss (lambda weights) on pyramids.
PyramidLoss prior_loss(const std::vector<ImageD>& rendered, const std::vector<ImageD>& target,
                       const LossWeights& weights);

struct ImageLoss {
  LossTerms terms;
  ImageD gradient;  // d loss / d rendered (full resolution)
};

/// Builds the rendered pyramid to match `target`, applies scene_loss, and folds
/// the per-level gradients back to full resolution.
ImageLoss scene_image_loss(const ImageD& rendered, const std::vector<ImageD>& target,
                           const LossWeights& weights);

/// weight * mean over planes and neighbor pairs of |sigma(p) - sigma(q)|.
/// Accumulates the gradient into grad (sigma channel) when non-null.
double sigma_total_variation(const PlaneStack<double>& planes, double weight,
                             PlaneStack<double>* grad);

}  // namespace immpi
