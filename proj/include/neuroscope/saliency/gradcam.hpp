#pragma once

#include <string>
#include <vector>

#include "neuroscope/data/image.hpp"
#include "neuroscope/networks/model.hpp"

namespace neuroscope {

inline constexpr double kDefaultThresholdFrac = 0.20;
inline constexpr double kAlphaEpsilon = 1e-8;

struct SaliencyMap {
  int width = 0, height = 0;
  std::vector<double> values;  // row-major, in [0,1]
  int source_class = 0;
  std::string layer = "cam_target";
  double threshold_frac = kDefaultThresholdFrac;
  RoiMask binary;

  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

// Raw Grad-CAM++ map relu(sum_k w_k A^k) from feature maps A and gradients
// g = dS/dA, both [K,h,w] row-major, using the exponential-score weights
//   alpha = g^2 / (2 g^2 + (sum A^k) g^3),  alpha = 0 where |denominator| < 1e-8
//   w_k   = sum_ij alpha_ij relu(g_ij)
std::vector<double> gradcam_pp_raw(const std::vector<double>& A, const std::vector<double>& g, std::size_t k,
                                   std::size_t h, std::size_t w);

// Channel weights w_k alone (same formula); exposed for tests.
std::vector<double> gradcam_pp_weights(const std::vector<double>& A, const std::vector<double>& g, std::size_t k,
                                       std::size_t h, std::size_t w);

// Upsample (corner-aligned bilinear) a raw map to width x height and min-max
// normalise; a constant map becomes all zeros.
std::vector<double> upsample_normalize(const std::vector<double>& raw, int raw_w, int raw_h, int width, int height);

// Grad-CAM++ for the class score (pre-softmax logit) at the model's
// "cam_target" activation, in inference mode. Throws std::invalid_argument for
// a class outside {0,1,2}, a size mismatch, or non-finite parameters.
SaliencyMap gradcam_pp(const Model& model, const ImageGray& image, int class_index,
                       double threshold_frac = kDefaultThresholdFrac);

// Mean of member maps, renormalised to [0,1], then thresholded.
SaliencyMap combine_maps(const std::vector<SaliencyMap>& maps, double threshold_frac = kDefaultThresholdFrac);

// Keeps exactly ceil(frac * H * W) pixels with the highest values; ties at the
// cut are taken in row-major order. Throws std::invalid_argument unless
// frac is in (0, 1].
RoiMask threshold_top_fraction(const std::vector<double>& values, int width, int height, double frac);
inline RoiMask threshold_top_fraction(const SaliencyMap& m, double frac) {
  return threshold_top_fraction(m.values, m.width, m.height, frac);
}

}  // namespace neuroscope
