#pragma once

#include "immpi/generator.hpp"
#include "immpi/image.hpp"
#include "immpi/mpi.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace immpi {

enum class ParameterMode { direct, implicit };

std::string_view to_string(ParameterMode mode);
ParameterMode parse_parameter_mode(std::string_view text);

// Pre-activation multiplier for direct mode; see Parameterization.
inline constexpr double kDefaultDirectGain = 20.0;

/// Trainable representation of the plane stack.
///
/// Direct mode stores one pre-activation per plane sample p and decodes
/// color = sigmoid(g p), sigma = softplus(g p) with gain g. Implicit mode stores
/// coordinate-generator weights and decodes the same activations from its
/// outputs. Decoded colors always lie in [0, 1] and sigma is finite and >= 0
/// for finite parameters.
class Parameterization {
 public:
  static Parameterization direct(int width, int height, int planes, double gain = kDefaultDirectGain);
  static Parameterization implicit(int width, int height, int planes, const GeneratorConfig& config,
                                   std::uint64_t seed);

  ParameterMode mode() const { return mode_; }
  int width() const { return width_; }
  int height() const { return height_; }
  int planes() const { return planes_; }
  double gain() const { return gain_; }
  const std::optional<CoordinateGenerator>& generator() const { return generator_; }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  /// Direct mode: seeds every plane's color with `image` and sets a uniform density.
  void initialize_from_image(const Image& image, double sigma);

  struct Cache {
    Eigen::MatrixXd raw;  // 4 x N pre-activations in PlaneStack order
    CoordinateGenerator::Cache generator;
  };

  PlaneStack<double> decode(Cache* cache = nullptr) const;

  /// Chain rule through the activations (and generator). `cache` must come from
  /// decode() on the current values.
  std::vector<double> decode_backward(const PlaneStack<double>& grad_planes, const Cache& cache) const;

 private:
  Parameterization(ParameterMode mode, int width, int height, int planes);

  ParameterMode mode_;
  int width_;
  int height_;
  int planes_;
  double gain_ = 1.0;
  std::vector<double> values_;
  std::optional<CoordinateGenerator> generator_;
  Eigen::MatrixXd inputs_;  // implicit mode only
};

/// decode() narrowed to the 32-bit MultiplaneImage payload.
PlaneStack<float> to_float_planes(const PlaneStack<double>& planes);

}  // namespace immpi
