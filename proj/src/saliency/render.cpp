#include "neuroscope/saliency/render.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

#include "neuroscope/data/dataset_io.hpp"
#include "neuroscope/data/mask_ops.hpp"

namespace neuroscope {

std::array<double, 3> jet(double v) {
  v = std::clamp(v, 0.0, 1.0);
  auto ramp = [](double x) { return std::clamp(1.5 - std::abs(4.0 * x), 0.0, 1.0); };
  return {ramp(v - 0.75), ramp(v - 0.5), ramp(v - 0.25)};
}

RgbImage render_overlay(const ImageGray& image, const std::vector<double>& map, const std::optional<RoiMask>& mask) {
  const std::size_t n = static_cast<std::size_t>(image.width) * image.height;
  if (map.size() != n) throw std::invalid_argument("render_overlay: heatmap size does not match image");
  if (mask && (mask->width != image.width || mask->height != image.height))
    throw std::invalid_argument("render_overlay: mask size does not match image");
  RgbImage out{image.width, image.height, std::vector<std::uint8_t>(3 * n)};
  const std::optional<RoiMask> edge = mask ? std::optional<RoiMask>(contour(*mask)) : std::nullopt;
  for (std::size_t i = 0; i < n; ++i) {
    const double base = std::clamp(image.pixels[i], 0.0, 1.0) * 255.0;
    const double v = std::clamp(map[i], 0.0, 1.0);
    const double a = kOverlayAlpha * v;
    const auto c = jet(v);
    for (int ch = 0; ch < 3; ++ch) {
      const double blended = a == 0.0 ? base : (1.0 - a) * base + a * 255.0 * c[ch];
      out.rgb[3 * i + ch] = static_cast<std::uint8_t>(std::lround(blended));
    }
    if (edge && edge->bits[i]) {
      out.rgb[3 * i] = 255;
      out.rgb[3 * i + 1] = 0;
      out.rgb[3 * i + 2] = 0;
    }
  }
  return out;
}

namespace {
void append_bytes(png_structp png, png_bytep data, png_size_t n) {
  auto* out = static_cast<std::string*>(png_get_io_ptr(png));
  out->append(reinterpret_cast<const char*>(data), n);
}
void no_flush(png_structp) {}
}  // namespace

std::string encode_png(const RgbImage& img) {
  if (img.width <= 0 || img.height <= 0 || img.rgb.size() != static_cast<std::size_t>(img.width) * img.height * 3)
    throw std::invalid_argument("encode_png: buffer does not match dimensions");
  std::string out;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng failed encoding");
  }
  png_set_write_fn(png, &out, &append_bytes, &no_flush);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < img.height; ++y) {
    png_write_row(png, img.rgb.data() + static_cast<std::size_t>(y) * img.width * 3);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

void write_png(const std::filesystem::path& path, const RgbImage& img) {
  write_text_file(path, encode_png(img));
}

void export_heatmap(const std::filesystem::path& pgm_path, const SaliencyMap& map,
                    const std::optional<OverlapScores>& scores) {
  std::vector<std::uint8_t> bytes(map.values.size());
  for (std::size_t i = 0; i < bytes.size(); ++i)
    bytes[i] = static_cast<std::uint8_t>(std::lround(std::clamp(map.values[i], 0.0, 1.0) * 255.0));
  write_pgm8(pgm_path, map.width, map.height, bytes);
  Json j{{"threshold", map.threshold_frac}, {"class", label_name(map.source_class)}, {"layer", map.layer}};
  j["dice"] = scores ? Json(scores->dice) : Json(nullptr);
  j["iou"] = scores ? Json(scores->iou) : Json(nullptr);
  std::filesystem::path json_path = pgm_path;
  json_path.replace_extension(".json");
  write_json_file(json_path, j);
}

}  // namespace neuroscope
