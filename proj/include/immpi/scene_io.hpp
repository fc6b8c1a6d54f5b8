#pragma once

#include "immpi/geometry.hpp"
#include "immpi/mpi.hpp"
#include "immpi/scene.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace immpi {

inline constexpr std::uint32_t kMpiFormatVersion = 1;
/// Rotations farther than this from orthonormal are rejected by parse_camera.
inline constexpr double kCameraOrthonormalTolerance = 1e-4;

/// Parses one camera block. The image size is not part of the text format and
/// comes from the caller. `source` names the file in error messages.
Camera parse_camera(std::string_view text, int width, int height, const std::string& source = {});

/// Parses any number of concatenated camera blocks (a render path).
std::vector<Camera> parse_camera_path(std::string_view text, int width, int height,
                                      const std::string& source = {});

/// Exact inverse of parse_camera: doubles are printed with 17 significant digits.
std::string format_camera(const Camera& camera);

Camera read_camera_file(const std::filesystem::path& path, int width, int height);
void write_camera_file(const Camera& camera, const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

/// Loads `root/images/NNN.png` + `root/cams/NNN.txt` pairs sorted by number,
/// and the optional `root/split.txt`.
Scene load_scene(const std::filesystem::path& root);

/// Writes the layout read by load_scene, including split.txt.
void save_scene(const Scene& scene, const std::filesystem::path& root);

/// Parses `train: ...` / `test: ...` lines for a scene with `views` views.
/// A missing test line puts every unlisted view in test.
void parse_split(std::string_view text, int views, std::vector<int>& train, std::vector<int>& test,
                 const std::string& source = {});
std::string format_split(const std::vector<int>& train, const std::vector<int>& test);

void save_mpi(const MultiplaneImage& mpi, const std::filesystem::path& path);
MultiplaneImage load_mpi(const std::filesystem::path& path);

std::vector<unsigned char> encode_mpi(const MultiplaneImage& mpi);
MultiplaneImage decode_mpi_bytes(const std::vector<unsigned char>& bytes, const std::string& source = {});

}  // namespace immpi
