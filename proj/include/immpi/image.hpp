#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace immpi {

/// Interleaved H x W x C raster.
template <typename T>
struct ImageT {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<T> data;

  ImageT() = default;
  ImageT(int w, int h, int c, T fill = T{})
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::size_t index(int x, int y, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  T& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
  const T& at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }

  bool same_shape(const ImageT& other) const {
    return width == other.width && height == other.height && channels == other.channels;
  }
  bool empty() const { return data.empty(); }
};

using Image = ImageT<float>;
using ImageD = ImageT<double>;

template <typename To, typename From>
ImageT<To> image_cast(const ImageT<From>& src) {
  ImageT<To> out(src.width, src.height, src.channels);
  for (std::size_t i = 0; i < src.data.size(); ++i) out.data[i] = static_cast<To>(src.data[i]);
  return out;
}

/// 2x2 box average; odd trailing rows/columns are dropped.
template <typename T>
ImageT<T> downsample2x(const ImageT<T>& src);

/// Adjoint of downsample2x: spreads each coarse gradient over its 2x2 block.
template <typename T>
ImageT<T> downsample2x_adjoint(const ImageT<T>& coarse_grad, int fine_width, int fine_height);

}  // namespace immpi
