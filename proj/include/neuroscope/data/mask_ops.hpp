#pragma once

#include <vector>

#include "neuroscope/data/image.hpp"

namespace neuroscope {

// Binary erosion with the 3x3 (8-neighbour) structuring element; pixels
// outside the image count as background.
RoiMask erode8(const RoiMask& m, int iterations = 1);

// Connected components (4-connectivity). Labels are 1..n in raster order of
// each component's first pixel; 0 is background.
struct Components {
  std::vector<int> labels;
  std::vector<std::size_t> sizes;  // sizes[k] for label k+1
};
Components label_components(const RoiMask& m);

// Largest 4-connected component; ties go to the earliest in raster order.
RoiMask largest_component(const RoiMask& m);

// Mask pixels with at least one 4-neighbour outside the mask (or image).
RoiMask contour(const RoiMask& m);

}  // namespace neuroscope
