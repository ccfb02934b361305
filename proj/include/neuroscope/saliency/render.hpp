#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "neuroscope/data/image.hpp"
#include "neuroscope/saliency/gradcam.hpp"
#include "neuroscope/saliency/overlap.hpp"

namespace neuroscope {

inline constexpr double kOverlayAlpha = 0.45;

struct RgbImage {
  int width = 0, height = 0;
  std::vector<std::uint8_t> rgb;  // 3 bytes per pixel, row-major

  bool operator==(const RgbImage&) const = default;
};

// Jet-style ramp for v in [0,1].
std::array<double, 3> jet(double v);

// Grayscale base, jet colour blended with per-pixel alpha 0.45 * v (so zero
// saliency leaves the base untouched), then the mask contour drawn in red.
RgbImage render_overlay(const ImageGray& image, const std::vector<double>& map,
                        const std::optional<RoiMask>& mask = std::nullopt);

std::string encode_png(const RgbImage& img);
void write_png(const std::filesystem::path& path, const RgbImage& img);

// Heatmap as 8-bit PGM plus `<stem>.json` {dice, iou, threshold, class}.
void export_heatmap(const std::filesystem::path& pgm_path, const SaliencyMap& map,
                    const std::optional<OverlapScores>& scores);

}  // namespace neuroscope
