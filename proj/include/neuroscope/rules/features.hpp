#pragma once

#include "neuroscope/common/json_util.hpp"
#include "neuroscope/data/image.hpp"

namespace neuroscope {

struct RegionFeatures {
  double area_cm2 = 0;
  double centroid_x = 0, centroid_y = 0;  // pixel-centre coordinates (x + 0.5)
  double midline_offset_frac = 0;         // |centroid_x - W/2| / W
  double ring_score = 0;                  // band mean / interior mean
  bool touches_boundary = false;
  double convexity = 0;  // area / convex-hull area, hull over pixel corners
  std::size_t pixel_count = 0;
  std::size_t components = 0;  // before reduction to the largest

  Json to_json() const;
  static RegionFeatures from_json(const Json& j);
};

// Intensity at or below this (on a [0,1] image) counts as extra-cerebral
// background for touches_boundary.
inline constexpr double kBackgroundLevel = 0.1;

// Features of the largest 4-connected component of `mask`. The ring band is
// the component minus its 8-neighbour erosion applied twice (2 px); an empty
// interior, or one with zero mean, gives ring_score 0. Throws
// std::invalid_argument for an empty mask or mismatched dimensions.
RegionFeatures region_features(const ImageGray& image, const RoiMask& mask);

// Area of the convex hull of the corners of all set pixels (pixel units).
double convex_hull_area(const RoiMask& mask);

}  // namespace neuroscope
