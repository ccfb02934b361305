#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace neuroscope {

enum class TumorClass : int { glioma = 0, meningioma = 1, pituitary = 2 };

// "glioma" | "meningioma" | "pituitary"
std::string label_name(int label);
// Throws std::invalid_argument for unknown names.
int label_from_name(std::string_view name);

inline constexpr int kMinImageSide = 8;

// Row-major grayscale image; spacing is isotropic mm per pixel.
struct ImageGray {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;
  double spacing_mm = 1.0;

  ImageGray() = default;
  ImageGray(int w, int h, double spacing, double fill = 0.0);

  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return pixels.size(); }
  // Throws std::invalid_argument when dimensions or spacing are invalid.
  void validate() const;

  bool operator==(const ImageGray&) const = default;
};

struct RoiMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;  // 0 or 1

  RoiMask() = default;
  RoiMask(int w, int h) : width(w), height(h), bits(static_cast<std::size_t>(w) * h, 0) {}

  std::uint8_t& at(int x, int y) { return bits[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x]; }
  bool inside(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }
  std::size_t count() const;
  bool empty() const { return count() == 0; }

  bool operator==(const RoiMask&) const = default;
};

struct Sample {
  std::string id;
  ImageGray image;
  int label = 0;
  std::optional<RoiMask> mask;

  bool operator==(const Sample&) const = default;
};

// I* = (I - min) / (max - min); a constant image maps to all zeros.
ImageGray normalize_minmax(const ImageGray& img);

// Corner-aligned bilinear resampling of a raw row-major buffer. Any target
// size >= 1 is accepted; a 1-pixel axis samples coordinate 0.
std::vector<double> resample_bilinear(std::span<const double> pixels, int width, int height,
                                      int target_width, int target_height);

// Square resize; throws std::invalid_argument when target < 8.
ImageGray resize_bilinear(const ImageGray& img, int target);

struct Rgb {
  double r, g, b;
};
// 0.299 R + 0.587 G + 0.114 B
ImageGray to_grayscale(std::span<const Rgb> rgb, int width, int height, double spacing_mm = 1.0);

// Resize (when needed) then min-max normalize: the model-input path.
ImageGray preprocess(const ImageGray& img, int target);

}  // namespace neuroscope
