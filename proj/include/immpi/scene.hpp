#pragma once

#include "immpi/geometry.hpp"
#include "immpi/image.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace immpi {

enum class Split { train, test };

std::string_view to_string(Split split);

struct View {
  std::string name;  // zero-padded numeric stem, e.g. "003"
  Camera camera;
  Image image;       // H x W x 3 in [0, 1]
};

/// Posed views plus the train/test assignment (indices into `views`).
struct Scene {
  std::vector<View> views;
  std::vector<int> train;
  std::vector<int> test;

  Split split_of(int view_index) const;
};

}  // namespace immpi
