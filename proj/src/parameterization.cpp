#include "immpi/parameterization.hpp"

#include "immpi/activations.hpp"
#include "immpi/errors.hpp"

#include <algorithm>

namespace immpi {

std::string_view to_string(ParameterMode mode) {
  return mode == ParameterMode::direct ? "direct" : "implicit";
}

ParameterMode parse_parameter_mode(std::string_view text) {
  if (text == "direct") return ParameterMode::direct;
  if (text == "implicit") return ParameterMode::implicit;
  throw InvalidArgument("unknown parameterization mode '" + std::string(text) + "'");
}

Parameterization::Parameterization(ParameterMode mode, int width, int height, int planes)
    : mode_(mode), width_(width), height_(height), planes_(planes) {
  if (width < 1 || height < 1 || planes < 1) {
    throw InvalidArgument("parameterization needs positive width, height and plane count");
  }
}

Parameterization Parameterization::direct(int width, int height, int planes, double gain) {
  if (!(gain > 0.0)) throw InvalidArgument("direct gain must be positive");
  Parameterization p(ParameterMode::direct, width, height, planes);
  p.gain_ = gain;
  p.values_.assign(static_cast<std::size_t>(width) * height * planes * kPlaneChannels, 0.0);
  return p;
}

Parameterization Parameterization::implicit(int width, int height, int planes,
                                            const GeneratorConfig& config, std::uint64_t seed) {
  Parameterization p(ParameterMode::implicit, width, height, planes);
  p.generator_.emplace(config);
  p.values_.assign(p.generator_->parameter_count(), 0.0);
  p.generator_->initialize(p.values_, seed);
  p.inputs_ = p.generator_->plane_inputs(width, height, planes);
  return p;
}

void Parameterization::initialize_from_image(const Image& image, double sigma) {
  if (mode_ != ParameterMode::direct) {
    throw InvalidArgument("image initialization applies to direct mode only");
  }
  if (image.width != width_ || image.height != height_ || image.channels != 3) {
    throw InvalidArgument("initialization image does not match the plane size");
  }
  if (!(sigma > 0.0)) throw InvalidArgument("initial density must be positive");
  const double sigma_pre = softplus_inverse(sigma) / gain_;
  for (int d = 0; d < planes_; ++d) {
    for (int y = 0; y < height_; ++y) {
      for (int x = 0; x < width_; ++x) {
        const std::size_t base =
            ((static_cast<std::size_t>(d) * height_ + y) * width_ + x) * kPlaneChannels;
        for (int c = 0; c < 3; ++c) {
          const double v = std::clamp(static_cast<double>(image.at(x, y, c)), 0.02, 0.98);
          values_[base + c] = logit(v) / gain_;
        }
        values_[base + 3] = sigma_pre;
      }
    }
  }
}

PlaneStack<double> Parameterization::decode(Cache* cache) const {
  PlaneStack<double> planes(width_, height_, planes_);
  const std::size_t n = static_cast<std::size_t>(width_) * height_ * planes_;
  Eigen::MatrixXd raw;
  if (mode_ == ParameterMode::direct) {
    raw = Eigen::Map<const Eigen::MatrixXd>(values_.data(), kPlaneChannels,
                                            static_cast<Eigen::Index>(n)) * gain_;
  } else {
    raw = generator_->forward(values_, inputs_, cache ? &cache->generator : nullptr);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < 3; ++c) planes.values[i * kPlaneChannels + c] = sigmoid(raw(c, static_cast<Eigen::Index>(i)));
    planes.values[i * kPlaneChannels + 3] = softplus(raw(3, static_cast<Eigen::Index>(i)));
  }
  if (cache) cache->raw = std::move(raw);
  return planes;
}

std::vector<double> Parameterization::decode_backward(const PlaneStack<double>& grad_planes,
                                                      const Cache& cache) const {
  const std::size_t n = static_cast<std::size_t>(width_) * height_ * planes_;
  if (grad_planes.values.size() != n * kPlaneChannels ||
      cache.raw.cols() != static_cast<Eigen::Index>(n)) {
    throw InvalidArgument("decode_backward: shape mismatch or stale cache");
  }
  Eigen::MatrixXd grad_raw(kPlaneChannels, static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    for (int c = 0; c < 3; ++c) {
      const double s = sigmoid(cache.raw(c, col));
      grad_raw(c, col) = grad_planes.values[i * kPlaneChannels + c] * s * (1.0 - s);
    }
    grad_raw(3, col) = grad_planes.values[i * kPlaneChannels + 3] * softplus_grad(cache.raw(3, col));
  }
  std::vector<double> grad(values_.size(), 0.0);
  if (mode_ == ParameterMode::direct) {
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = grad_raw.data()[i] * gain_;
  } else {
    generator_->backward(values_, cache.generator, grad_raw, grad);
  }
  return grad;
}

PlaneStack<float> to_float_planes(const PlaneStack<double>& planes) {
  PlaneStack<float> out(planes.width, planes.height, planes.count);
  for (std::size_t i = 0; i < planes.values.size(); ++i) {
    out.values[i] = static_cast<float>(planes.values[i]);
  }
  return out;
}

}  // namespace immpi
