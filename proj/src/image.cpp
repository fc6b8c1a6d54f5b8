#include "immpi/image.hpp"

#include "immpi/errors.hpp"

namespace immpi {

template <typename T>
ImageT<T> downsample2x(const ImageT<T>& src) {
  const int w = src.width / 2;
  const int h = src.height / 2;
  if (w < 1 || h < 1) throw InvalidArgument("image too small to downsample");
  ImageT<T> out(w, h, src.channels);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < src.channels; ++c) {
        out.at(x, y, c) = T(0.25) * (src.at(2 * x, 2 * y, c) + src.at(2 * x + 1, 2 * y, c) +
                                     src.at(2 * x, 2 * y + 1, c) + src.at(2 * x + 1, 2 * y + 1, c));
      }
    }
  }
  return out;
}

template <typename T>
ImageT<T> downsample2x_adjoint(const ImageT<T>& coarse_grad, int fine_width, int fine_height) {
  ImageT<T> out(fine_width, fine_height, coarse_grad.channels);
  for (int y = 0; y < coarse_grad.height; ++y) {
    for (int x = 0; x < coarse_grad.width; ++x) {
      for (int c = 0; c < coarse_grad.channels; ++c) {
        const T g = T(0.25) * coarse_grad.at(x, y, c);
        out.at(2 * x, 2 * y, c) += g;
        out.at(2 * x + 1, 2 * y, c) += g;
        out.at(2 * x, 2 * y + 1, c) += g;
        out.at(2 * x + 1, 2 * y + 1, c) += g;
      }
    }
  }
  return out;
}

template ImageT<float> downsample2x(const ImageT<float>&);
template ImageT<double> downsample2x(const ImageT<double>&);
template ImageT<float> downsample2x_adjoint(const ImageT<float>&, int, int);
template ImageT<double> downsample2x_adjoint(const ImageT<double>&, int, int);

}  // namespace immpi
