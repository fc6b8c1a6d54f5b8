#pragma once

#include "immpi/image.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace immpi {

/// Reads an 8-bit PNG as H x W x 3 in [0, 1]. Gray and alpha inputs are
/// expanded or dropped to RGB; 16-bit inputs are reduced to 8 bits.
Image read_png_rgb(const std::filesystem::path& path);

/// Writes an 8-bit RGB PNG; values map through round(clamp(v, 0, 1) * 255).
void write_png_rgb(const Image& image, const std::filesystem::path& path);

/// Writes a 16-bit grayscale PNG from raw samples (row-major, width * height).
void write_png_gray16(const std::vector<std::uint16_t>& samples, int width, int height,
                      const std::filesystem::path& path);

/// Reads a 16-bit grayscale PNG back as raw samples.
std::vector<std::uint16_t> read_png_gray16(const std::filesystem::path& path, int* width,
                                           int* height);

std::uint8_t to_byte(float value);

}  // namespace immpi
