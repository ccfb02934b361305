#include "neuroscope/rules/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "neuroscope/data/mask_ops.hpp"

namespace neuroscope {

double convex_hull_area(const RoiMask& mask) {
  using P = std::pair<long, long>;
  std::vector<P> pts;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(x, y)) {
        pts.emplace_back(x, y);
        pts.emplace_back(x + 1, y);
        pts.emplace_back(x, y + 1);
        pts.emplace_back(x + 1, y + 1);
      }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return 0.0;
  auto cross = [](const P& o, const P& a, const P& b) {
    return (a.first - o.first) * (b.second - o.second) - (a.second - o.second) * (b.first - o.first);
  };
  // Andrew's monotone chain
  std::vector<P> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lo = k + 1; i-- > 0;) {
    while (k >= lo && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  long twice = 0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const P& a = hull[i];
    const P& b = hull[(i + 1) % hull.size()];
    twice += a.first * b.second - b.first * a.second;
  }
  return std::abs(double(twice)) / 2.0;
}

RegionFeatures region_features(const ImageGray& image, const RoiMask& mask) {
  if (mask.width != image.width || mask.height != image.height)
    throw std::invalid_argument("region_features: mask and image dimensions differ");
  RegionFeatures f;
  f.components = label_components(mask).sizes.size();
  if (f.components == 0) throw std::invalid_argument("region_features: empty mask");
  const RoiMask region = largest_component(mask);

  double sx = 0, sy = 0;
  for (int y = 0; y < region.height; ++y)
    for (int x = 0; x < region.width; ++x)
      if (region.at(x, y)) {
        sx += x + 0.5;
        sy += y + 0.5;
        ++f.pixel_count;
      }
  const double n = double(f.pixel_count);
  f.area_cm2 = n * image.spacing_mm * image.spacing_mm / 100.0;
  f.centroid_x = sx / n;
  f.centroid_y = sy / n;
  f.midline_offset_frac = std::abs(f.centroid_x - region.width / 2.0) / region.width;

  const RoiMask interior = erode8(region, 2);
  double band_sum = 0, band_n = 0, in_sum = 0, in_n = 0;
  for (std::size_t i = 0; i < region.bits.size(); ++i) {
    if (!region.bits[i]) continue;
    if (interior.bits[i]) {
      in_sum += image.pixels[i];
      in_n += 1;
    } else {
      band_sum += image.pixels[i];
      band_n += 1;
    }
  }
  const double in_mean = in_n > 0 ? in_sum / in_n : 0.0;
  f.ring_score = in_mean > 0 ? std::max(0.0, (band_sum / band_n) / in_mean) : 0.0;

  for (int y = 0; y < region.height && !f.touches_boundary; ++y)
    for (int x = 0; x < region.width && !f.touches_boundary; ++x) {
      if (!region.at(x, y)) continue;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int qx = x + dx, qy = y + dy;
          if (!region.inside(qx, qy) || (!region.at(qx, qy) && image.at(qx, qy) <= kBackgroundLevel))
            f.touches_boundary = true;
        }
    }

  const double hull = convex_hull_area(region);
  f.convexity = hull > 0 ? std::min(1.0, n / hull) : 1.0;
  return f;
}

Json RegionFeatures::to_json() const {
  return Json{{"area_cm2", area_cm2},
              {"centroid", {centroid_x, centroid_y}},
              {"midline_offset_frac", midline_offset_frac},
              {"ring_score", ring_score},
              {"touches_boundary", touches_boundary},
              {"convexity", convexity},
              {"pixel_count", pixel_count},
              {"components", components}};
}

RegionFeatures RegionFeatures::from_json(const Json& j) {
  RegionFeatures f;
  f.area_cm2 = j.at("area_cm2").get<double>();
  f.centroid_x = j.at("centroid").at(0).get<double>();
  f.centroid_y = j.at("centroid").at(1).get<double>();
  f.midline_offset_frac = j.at("midline_offset_frac").get<double>();
  f.ring_score = j.at("ring_score").get<double>();
  f.touches_boundary = j.at("touches_boundary").get<bool>();
  f.convexity = j.at("convexity").get<double>();
  f.pixel_count = j.at("pixel_count").get<std::size_t>();
  f.components = j.at("components").get<std::size_t>();
  return f;
}

}  // namespace neuroscope
