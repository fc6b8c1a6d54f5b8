#include "immpi/generator.hpp"

#include "immpi/activations.hpp"
#include "immpi/errors.hpp"

#include <cmath>
#include <random>

namespace immpi {

namespace {
using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using MatMap = Eigen::Map<Eigen::MatrixXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
}  // namespace

CoordinateGenerator::CoordinateGenerator(GeneratorConfig config) : config_(config) {
  if (config_.hidden_layers < 1 || config_.hidden_width < 1 || config_.frequencies < 1) {
    throw InvalidArgument("generator needs at least one hidden layer, unit, and frequency");
  }
  int in = input_size();
  std::size_t offset = 0;
  for (int l = 0; l <= config_.hidden_layers; ++l) {
    const int out = l == config_.hidden_layers ? output_size() : config_.hidden_width;
    Layer layer{in, out, offset, offset + static_cast<std::size_t>(in) * out};
    offset = layer.bias_offset + static_cast<std::size_t>(out);
    layers_.push_back(layer);
    in = out;
  }
  parameter_count_ = offset;
}

void CoordinateGenerator::initialize(std::span<double> params, std::uint64_t seed) const {
  if (params.size() != parameter_count_) throw InvalidArgument("generator parameter size mismatch");
  std::mt19937_64 rng(seed);
  for (const Layer& layer : layers_) {
    const double bound = std::sqrt(6.0 / (layer.in + layer.out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t i = 0; i < static_cast<std::size_t>(layer.in) * layer.out; ++i) {
      params[layer.weight_offset + i] = dist(rng);
    }
    for (int i = 0; i < layer.out; ++i) params[layer.bias_offset + i] = 0.0;
  }
}

Eigen::MatrixXd CoordinateGenerator::plane_inputs(int width, int height, int planes) const {
  const Eigen::Index n = static_cast<Eigen::Index>(width) * height * planes;
  Eigen::MatrixXd inputs(input_size(), n);
  Eigen::Index col = 0;
  for (int d = 0; d < planes; ++d) {
    const std::vector<double> gamma =
        depth_embedding(normalized_plane_ordinal(d, planes), config_.frequencies);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x, ++col) {
        inputs(0, col) = static_cast<double>(x) / width;
        inputs(1, col) = static_cast<double>(y) / height;
        for (std::size_t k = 0; k < gamma.size(); ++k) inputs(2 + static_cast<Eigen::Index>(k), col) = gamma[k];
      }
    }
  }
  return inputs;
}

Eigen::MatrixXd CoordinateGenerator::forward(std::span<const double> params,
                                             const Eigen::MatrixXd& inputs, Cache* cache) const {
  if (params.size() != parameter_count_) throw InvalidArgument("generator parameter size mismatch");
  if (inputs.rows() != input_size()) throw InvalidArgument("generator input size mismatch");
  if (cache) {
    cache->activations.clear();
    cache->activations.push_back(inputs);
  }
  Eigen::MatrixXd x = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    ConstMatMap w(params.data() + layer.weight_offset, layer.out, layer.in);
    ConstVecMap b(params.data() + layer.bias_offset, layer.out);
    Eigen::MatrixXd z = w * x;
    z.colwise() += b;
    if (l + 1 == layers_.size()) return z;
    x = z.array().tanh().matrix();
    if (cache) cache->activations.push_back(x);
  }
  return x;
}

void CoordinateGenerator::backward(std::span<const double> params, const Cache& cache,
                                   const Eigen::MatrixXd& grad_output,
                                   std::span<double> grad_params) const {
  if (grad_params.size() != parameter_count_) throw InvalidArgument("gradient size mismatch");
  if (cache.activations.size() != layers_.size()) throw InvalidArgument("generator cache is stale");
  Eigen::MatrixXd delta = grad_output;  // d loss / d z of the current layer
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Layer& layer = layers_[l];
    const Eigen::MatrixXd& input = cache.activations[l];
    MatMap gw(grad_params.data() + layer.weight_offset, layer.out, layer.in);
    VecMap gb(grad_params.data() + layer.bias_offset, layer.out);
    gw.noalias() += delta * input.transpose();
    gb += delta.rowwise().sum();
    if (l == 0) break;
    ConstMatMap w(params.data() + layer.weight_offset, layer.out, layer.in);
    Eigen::MatrixXd grad_input = w.transpose() * delta;
    // input is tanh output of layer l-1.
    delta = grad_input.array() * (1.0 - input.array().square());
  }
}

}  // namespace immpi
