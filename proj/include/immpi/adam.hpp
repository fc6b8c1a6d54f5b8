#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace immpi {

inline constexpr double kDefaultLearningRate = 1e-3;

struct AdamConfig {
  double learning_rate = kDefaultLearningRate;  // constant schedule
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment buffers shaped like the parameters they update.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;

  explicit AdamState(std::size_t size = 0) : m(size, 0.0), v(size, 0.0) {}
};

/// One bias-corrected Adam update in place. Throws NonFiniteValue (leaving
/// everything untouched) if any gradient entry is NaN or infinite.
void adam_step(std::span<double> params, std::span<const double> grad, AdamState& state,
               const AdamConfig& config);

}  // namespace immpi
