#include "immpi/activations.hpp"

#include "immpi/errors.hpp"

#include <numbers>

namespace immpi {

std::vector<double> depth_embedding(double d, int frequencies) {
  if (frequencies < 1) throw InvalidArgument("embedding needs at least one frequency");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(2 * frequencies));
  double scale = std::numbers::pi;
  for (int k = 0; k < frequencies; ++k, scale *= 2.0) {
    out.push_back(std::sin(scale * d));
    out.push_back(std::cos(scale * d));
  }
  return out;
}

}  // namespace immpi
