#pragma once

#include "immpi/mpi.hpp"
#include "immpi/scene.hpp"

#include <cstdint>

namespace immpi {

struct SynthConfig {
  std::uint64_t seed = 0;
  int width = 64;
  int height = 64;
  int planes = 3;
  int views = 8;
  int train = 5;  // the first `train` views form the train split
};

/// Layered ground truth plus views rendered from it by brute_force_render.
/// View 0 is the reference camera of the ground-truth MPI.
struct SyntheticScene {
  MultiplaneImage ground_truth;
  Scene scene;
  std::uint64_t seed = 0;
};

/// Procedural band-limited textures on an opaque back plane and sparse opaque
/// shapes in front of it; cameras look down at <= 25 degrees off nadir from a
/// small ring around the reference. Deterministic in the seed.
SyntheticScene make_scene(const SynthConfig& config);

/// Camera pose for view `index` of a synthetic scene (view 0 is the reference).
Camera synthetic_camera(int index, int width, int height);

struct BruteForceOutput {
  Image color;    // H x W x 3
  Image depth;    // H x W x 1
  Image opacity;  // H x W x 1
};

/// Independent reference compositor: per-pixel ray/plane intersection and
/// scalar accumulation, sharing no code with render_novel_view.
BruteForceOutput brute_force_render(const MultiplaneImage& mpi, const Camera& camera,
                                    double single_plane_spacing = 1.0);

}  // namespace immpi
