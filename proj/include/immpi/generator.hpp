#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

namespace immpi {

struct GeneratorConfig {
  int hidden_layers = 4;
  int hidden_width = 64;
  int frequencies = 5;  // depth embedding frequencies L
};

/// Coordinate MLP: (x/W, y/H, gamma(d)) -> raw (r, g, b, sigma) pre-activations.
/// Hidden layers use tanh; the output layer is linear. Samples are columns.
class CoordinateGenerator {
 public:
  explicit CoordinateGenerator(GeneratorConfig config);

  const GeneratorConfig& config() const { return config_; }
  int input_size() const { return 2 + 2 * config_.frequencies; }
  static constexpr int output_size() { return 4; }
  std::size_t parameter_count() const { return parameter_count_; }

  /// Glorot-uniform weights, zero biases.
  void initialize(std::span<double> params, std::uint64_t seed) const;

  /// Inputs for every (plane, pixel) of a width x height x planes stack, in
  /// PlaneStack order.
  Eigen::MatrixXd plane_inputs(int width, int height, int planes) const;

  struct Cache {
    std::vector<Eigen::MatrixXd> activations;  // input followed by each hidden output
  };

  Eigen::MatrixXd forward(std::span<const double> params, const Eigen::MatrixXd& inputs,
                          Cache* cache) const;

  /// Accumulates d(loss)/d(params) into grad_params.
  void backward(std::span<const double> params, const Cache& cache, const Eigen::MatrixXd& grad_output,
                std::span<double> grad_params) const;

 private:
  struct Layer {
    int in = 0;
    int out = 0;
    std::size_t weight_offset = 0;
    std::size_t bias_offset = 0;
  };

  GeneratorConfig config_;
  std::vector<Layer> layers_;
  std::size_t parameter_count_ = 0;
};

}  // namespace immpi
