#pragma once

#include <array>
#include <cstdint>

#include "neuroscope/common/json_util.hpp"
#include "neuroscope/common/rng.hpp"
#include "neuroscope/data/image.hpp"

namespace neuroscope {

struct AugmentConfig {
  bool h_flip = true;   // flip with probability 1/2
  bool v_flip = true;
  double rotation_deg_max = 270.0;  // angle ~ U[0, max]
  double shift_frac = 0.20;         // per axis ~ U[-f, f] * dimension
  std::array<double, 2> zoom_range{0.1, 1.0};
  double shear = 0.2;  // radians, ~ U[-shear, shear]
  std::array<double, 2> brightness_range{0.2, 1.0};
  bool clahe = true;
  std::uint64_t seed = 0;

  // Every op disabled / degenerate: augment() returns its input.
  static AugmentConfig identity();
  // Throws std::invalid_argument on out-of-range fields.
  void validate() const;
  Json to_json() const;
  static AugmentConfig from_json(const Json& j);
};

// The concrete draw for one call; exposed for tests.
struct AugmentDraw {
  bool h_flip = false, v_flip = false;
  double rotation_deg = 0.0, shift_x = 0.0, shift_y = 0.0;  // shifts in pixels
  double zoom = 1.0, shear = 0.0, brightness = 1.0;
};
AugmentDraw draw_augment(const AugmentConfig& cfg, int width, int height, Rng& rng);

// Applies one draw. The image is resampled bilinearly with edge replication,
// the mask by nearest neighbour; photometric steps touch the image only.
Sample apply_augment(const Sample& s, const AugmentDraw& d, const AugmentConfig& cfg);

Sample augment(const Sample& s, const AugmentConfig& cfg, Rng& rng);

// Contrast-limited adaptive histogram equalisation over a tiles x tiles grid
// for images in [0, 1] (256 bins).
ImageGray clahe(const ImageGray& img, int tiles = 8, double clip_limit = 2.0);

}  // namespace neuroscope
