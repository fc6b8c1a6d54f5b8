#pragma once

#include <cmath>
#include <vector>

namespace immpi {

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log(1 + e^x) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double softplus_grad(double x) { return sigmoid(x); }

inline double logit(double p) { return std::log(p / (1.0 - p)); }

/// Inverse of softplus for y > 0.
inline double softplus_inverse(double y) {
  return y > 30.0 ? y + std::log(-std::expm1(-y)) : std::log(std::expm1(y));
}

/// [sin(2^0 pi d), cos(2^0 pi d), ..., sin(2^{L-1} pi d), cos(2^{L-1} pi d)]
std::vector<double> depth_embedding(double d, int frequencies);

/// Plane ordinal mapped to [0, 1]; a single plane maps to 0.
inline double normalized_plane_ordinal(int index, int count) {
  return count > 1 ? static_cast<double>(index) / (count - 1) : 0.0;
}

}  // namespace immpi
