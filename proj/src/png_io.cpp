#include "immpi/png_io.hpp"

#include "immpi/errors.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

namespace immpi {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open file", path.string(), 0);
  return f;
}

// png_image is libpng's simplified API; it owns no memory after free.
struct PngImage {
  png_image image{};
  PngImage() { image.version = PNG_IMAGE_VERSION; }
  ~PngImage() { png_image_free(&image); }
};

std::vector<png_byte> read_with_format(const std::filesystem::path& path, png_uint_32 format,
                                       int* width, int* height) {
  PngImage png;
  if (!png_image_begin_read_from_file(&png.image, path.c_str())) {
    throw IoError(std::string("cannot read PNG: ") + png.image.message, path.string(), 0);
  }
  png.image.format = format;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(png.image));
  if (!png_image_finish_read(&png.image, nullptr, buffer.data(), 0, nullptr)) {
    throw IoError(std::string("cannot decode PNG: ") + png.image.message, path.string(), 0);
  }
  *width = static_cast<int>(png.image.width);
  *height = static_cast<int>(png.image.height);
  return buffer;
}

void write_with_format(const std::filesystem::path& path, png_uint_32 format, int width, int height,
                       const void* data) {
  PngImage png;
  png.image.width = static_cast<png_uint_32>(width);
  png.image.height = static_cast<png_uint_32>(height);
  png.image.format = format;
  FilePtr f = open_file(path, "wb");
  if (!png_image_write_to_stdio(&png.image, f.get(), 0, data, 0, nullptr)) {
    throw IoError(std::string("cannot write PNG: ") + png.image.message, path.string(), 0);
  }
}

}  // namespace

std::uint8_t to_byte(float value) {
  const float v = std::clamp(std::isnan(value) ? 0.0f : value, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(v * 255.0f));
}

Image read_png_rgb(const std::filesystem::path& path) {
  int w = 0;
  int h = 0;
  const std::vector<png_byte> bytes = read_with_format(path, PNG_FORMAT_RGB, &w, &h);
  Image out(w, h, 3);
  for (std::size_t i = 0; i < bytes.size(); ++i) out.data[i] = static_cast<float>(bytes[i]) / 255.0f;
  return out;
}

void write_png_rgb(const Image& image, const std::filesystem::path& path) {
  if (image.channels != 3) throw InvalidArgument("write_png_rgb expects a 3-channel image");
  std::vector<png_byte> bytes(image.data.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = to_byte(image.data[i]);
  write_with_format(path, PNG_FORMAT_RGB, image.width, image.height, bytes.data());
}

void write_png_gray16(const std::vector<std::uint16_t>& samples, int width, int height,
                      const std::filesystem::path& path) {
  if (samples.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw InvalidArgument("write_png_gray16: sample count does not match size");
  }
  // The simplified API treats 16-bit data as linear; PNG_FORMAT_LINEAR_Y stores it unchanged.
  write_with_format(path, PNG_FORMAT_LINEAR_Y, width, height, samples.data());
}

std::vector<std::uint16_t> read_png_gray16(const std::filesystem::path& path, int* width,
                                           int* height) {
  PngImage png;
  if (!png_image_begin_read_from_file(&png.image, path.c_str())) {
    throw IoError(std::string("cannot read PNG: ") + png.image.message, path.string(), 0);
  }
  png.image.format = PNG_FORMAT_LINEAR_Y;
  std::vector<std::uint16_t> samples(PNG_IMAGE_SIZE(png.image) / 2);
  if (!png_image_finish_read(&png.image, nullptr, samples.data(), 0, nullptr)) {
    throw IoError(std::string("cannot decode PNG: ") + png.image.message, path.string(), 0);
  }
  *width = static_cast<int>(png.image.width);
  *height = static_cast<int>(png.image.height);
  return samples;
}

}  // namespace immpi
