#include "neuroscope/data/image.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace neuroscope {

std::string label_name(int label) {
  switch (label) {
    case 0:
      return "glioma";
    case 1:
      return "meningioma";
    case 2:
      return "pituitary";
  }
  throw std::invalid_argument("label index " + std::to_string(label) + " outside {0,1,2}");
}

int label_from_name(std::string_view name) {
  if (name == "glioma") return 0;
  if (name == "meningioma") return 1;
  if (name == "pituitary") return 2;
  throw std::invalid_argument("unknown label '" + std::string(name) + "'");
}

ImageGray::ImageGray(int w, int h, double spacing, double fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(std::max(w, 0)) * std::max(h, 0), fill),
      spacing_mm(spacing) {}

void ImageGray::validate() const {
  if (width < kMinImageSide || height < kMinImageSide) {
    throw std::invalid_argument("image must be at least 8x8, got " + std::to_string(width) + "x" +
                                std::to_string(height));
  }
  if (!(spacing_mm > 0.0)) throw std::invalid_argument("pixel spacing must be positive");
  if (pixels.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("pixel buffer does not match image dimensions");
  }
}

std::size_t RoiMask::count() const {
  return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), std::uint8_t{1}));
}

ImageGray normalize_minmax(const ImageGray& img) {
  ImageGray out = img;
  if (img.pixels.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(img.pixels.begin(), img.pixels.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) {
    std::fill(out.pixels.begin(), out.pixels.end(), 0.0);
    return out;
  }
  const double range = hi - lo;
  for (auto& v : out.pixels) v = (v - lo) / range;
  return out;
}

std::vector<double> resample_bilinear(std::span<const double> pixels, int width, int height,
                                      int target_width, int target_height) {
  if (width < 1 || height < 1 || target_width < 1 || target_height < 1 ||
      pixels.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("resample_bilinear: invalid dimensions");
  }
  std::vector<double> out(static_cast<std::size_t>(target_width) * target_height);
  const double sx = target_width > 1 ? double(width - 1) / double(target_width - 1) : 0.0;
  const double sy = target_height > 1 ? double(height - 1) / double(target_height - 1) : 0.0;
  for (int y = 0; y < target_height; ++y) {
    const double fy = y * sy;
    const int y0 = std::min(static_cast<int>(std::floor(fy)), height - 1);
    const int y1 = std::min(y0 + 1, height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < target_width; ++x) {
      const double fx = x * sx;
      const int x0 = std::min(static_cast<int>(std::floor(fx)), width - 1);
      const int x1 = std::min(x0 + 1, width - 1);
      const double wx = fx - x0;
      const double p00 = pixels[static_cast<std::size_t>(y0) * width + x0];
      double v = p00;
      if (wx != 0.0 || wy != 0.0) {
        const double p01 = pixels[static_cast<std::size_t>(y0) * width + x1];
        const double p10 = pixels[static_cast<std::size_t>(y1) * width + x0];
        const double p11 = pixels[static_cast<std::size_t>(y1) * width + x1];
        v = (1 - wy) * ((1 - wx) * p00 + wx * p01) + wy * ((1 - wx) * p10 + wx * p11);
      }
      out[static_cast<std::size_t>(y) * target_width + x] = v;
    }
  }
  return out;
}

ImageGray resize_bilinear(const ImageGray& img, int target) {
  if (target < kMinImageSide) {
    throw std::invalid_argument("resize target must be >= 8, got " + std::to_string(target));
  }
  ImageGray out(target, target, img.spacing_mm);
  out.pixels = resample_bilinear(img.pixels, img.width, img.height, target, target);
  // keep physical extent: spacing scales with the pixel pitch
  if (target != img.width) out.spacing_mm = img.spacing_mm * double(img.width) / double(target);
  return out;
}

ImageGray to_grayscale(std::span<const Rgb> rgb, int width, int height, double spacing_mm) {
  if (rgb.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("to_grayscale: pixel count does not match dimensions");
  }
  ImageGray out(width, height, spacing_mm);
  for (std::size_t i = 0; i < rgb.size(); ++i) {
    out.pixels[i] = 0.299 * rgb[i].r + 0.587 * rgb[i].g + 0.114 * rgb[i].b;
  }
  return out;
}

ImageGray preprocess(const ImageGray& img, int target) {
  if (img.width == target && img.height == target) return normalize_minmax(img);
  return normalize_minmax(resize_bilinear(img, target));
}

}  // namespace neuroscope
