#include "immpi/loss.hpp"

#include "immpi/errors.hpp"
#include "immpi/metrics.hpp"

#include <cmath>

namespace immpi {

void LossWeights::validate() const {
  for (double w : {lambda1, lambda2, beta1, beta2, beta3, tv}) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("loss weights must be finite and >= 0");
  }
  if (beta3 != 0.0) throw InvalidArgument("beta3 (LPIPS) must be 0: LPIPS is not supported");
}

std::vector<ImageD> build_pyramid(const ImageD& image, int levels) {
  if (levels < 1) throw InvalidArgument("pyramid needs at least one level");
  std::vector<ImageD> out;
  out.push_back(image);
  while (static_cast<int>(out.size()) < levels && out.back().width >= 2 && out.back().height >= 2) {
    out.push_back(downsample2x(out.back()));
  }
  return out;
}

PyramidLoss pyramid_loss(const std::vector<ImageD>& rendered, const std::vector<ImageD>& target,
                         double l1_weight, double ssim_weight) {
  if (rendered.size() != target.size() || rendered.empty()) {
    throw InvalidArgument("loss: pyramid depth mismatch");
  }
  PyramidLoss out;
  for (std::size_t s = 0; s < rendered.size(); ++s) {
    const ImageD& r = rendered[s];
    const ImageD& t = target[s];
    if (!r.same_shape(t) || r.empty()) throw InvalidArgument("loss: image shape mismatch");
    ImageD grad(r.width, r.height, r.channels);
    const double inv_n = 1.0 / static_cast<double>(r.data.size());
    double l1 = 0.0;
    for (std::size_t i = 0; i < r.data.size(); ++i) {
      const double d = r.data[i] - t.data[i];
      l1 += std::abs(d);
      grad.data[i] = l1_weight * inv_n * static_cast<double>((d > 0.0) - (d < 0.0));
    }
    out.terms.l1 += l1_weight * l1 * inv_n;
    if (ssim_weight > 0.0 && r.width >= kSsimWindow && r.height >= kSsimWindow) {
      ImageD ssim_grad;
      const double s_val = ssim_with_gradient(r, t, &ssim_grad);
      out.terms.ssim += ssim_weight * (1.0 - s_val);
      for (std::size_t i = 0; i < grad.data.size(); ++i) grad.data[i] -= ssim_weight * ssim_grad.data[i];
    }
    out.gradients.push_back(std::move(grad));
  }
  out.terms.total = out.terms.l1 + out.terms.ssim;
  return out;
}

PyramidLoss scene_loss(const std::vector<ImageD>& rendered, const std::vector<ImageD>& target,
                       const LossWeights& weights) {
  weights.validate();
  return pyramid_loss(rendered, target, weights.beta1, weights.beta2);
}

PyramidLoss prior_loss(const std::vector<ImageD>& rendered, const std::vector<ImageD>& target,
                       const LossWeights& weights) {
  weights.validate();
  return pyramid_loss(rendered, target, weights.lambda1, weights.lambda2);
}

ImageLoss scene_image_loss(const ImageD& rendered, const std::vector<ImageD>& target,
                           const LossWeights& weights) {
  if (target.empty()) throw InvalidArgument("loss: empty target pyramid");
  const std::vector<ImageD> pyramid = build_pyramid(rendered, static_cast<int>(target.size()));
  if (pyramid.size() != target.size()) throw InvalidArgument("loss: pyramid depth mismatch");
  PyramidLoss pl = scene_loss(pyramid, target, weights);
  // Fold coarse gradients back down to level 0.
  for (std::size_t s = pl.gradients.size() - 1; s > 0; --s) {
    const ImageD up = downsample2x_adjoint(pl.gradients[s], pyramid[s - 1].width, pyramid[s - 1].height);
    for (std::size_t i = 0; i < up.data.size(); ++i) pl.gradients[s - 1].data[i] += up.data[i];
  }
  return {pl.terms, std::move(pl.gradients.front())};
}

double sigma_total_variation(const PlaneStack<double>& planes, double weight,
                             PlaneStack<double>* grad) {
  if (weight == 0.0) return 0.0;
  const int w = planes.width;
  const int h = planes.height;
  const double pairs = static_cast<double>(planes.count) * ((w - 1) * h + w * (h - 1));
  if (pairs <= 0.0) return 0.0;
  const double scale = weight / pairs;
  double sum = 0.0;
  auto visit = [&](int d, int x0, int y0, int x1, int y1) {
    const double diff = planes.at(d, x1, y1, 3) - planes.at(d, x0, y0, 3);
    sum += std::abs(diff);
    if (grad) {
      const double s = scale * static_cast<double>((diff > 0.0) - (diff < 0.0));
      grad->at(d, x1, y1, 3) += s;
      grad->at(d, x0, y0, 3) -= s;
    }
  };
  for (int d = 0; d < planes.count; ++d) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (x + 1 < w) visit(d, x, y, x + 1, y);
        if (y + 1 < h) visit(d, x, y, x, y + 1);
      }
    }
  }
  return sum * scale;
}

}  // namespace immpi
