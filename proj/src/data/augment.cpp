#include "neuroscope/data/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace neuroscope {

AugmentConfig AugmentConfig::identity() {
  AugmentConfig c;
  c.h_flip = c.v_flip = false;
  c.rotation_deg_max = 0.0;
  c.shift_frac = 0.0;
  c.zoom_range = {1.0, 1.0};
  c.shear = 0.0;
  c.brightness_range = {1.0, 1.0};
  c.clahe = false;
  return c;
}

void AugmentConfig::validate() const {
  if (!(rotation_deg_max >= 0.0 && rotation_deg_max <= 360.0))
    throw std::invalid_argument("rotation_deg_max must be in [0, 360]");
  if (!(shift_frac >= 0.0 && shift_frac < 1.0)) throw std::invalid_argument("shift_frac must be in [0, 1)");
  if (!(zoom_range[0] > 0.0 && zoom_range[0] <= zoom_range[1]))
    throw std::invalid_argument("zoom_range must satisfy 0 < lo <= hi");
  if (!(shear >= 0.0 && shear < std::numbers::pi / 2)) throw std::invalid_argument("shear must be in [0, pi/2)");
  if (!(brightness_range[0] > 0.0 && brightness_range[0] <= brightness_range[1]))
    throw std::invalid_argument("brightness_range must satisfy 0 < lo <= hi");
}

Json AugmentConfig::to_json() const {
  return Json{{"h_flip", h_flip},
              {"v_flip", v_flip},
              {"rotation_deg_max", rotation_deg_max},
              {"shift_frac", shift_frac},
              {"zoom_range", zoom_range},
              {"shear", shear},
              {"brightness_range", brightness_range},
              {"clahe", clahe},
              {"seed", seed}};
}

AugmentConfig AugmentConfig::from_json(const Json& j) {
  AugmentConfig c;
  c.h_flip = j.value("h_flip", c.h_flip);
  c.v_flip = j.value("v_flip", c.v_flip);
  c.rotation_deg_max = j.value("rotation_deg_max", c.rotation_deg_max);
  c.shift_frac = j.value("shift_frac", c.shift_frac);
  c.zoom_range = j.value("zoom_range", c.zoom_range);
  c.shear = j.value("shear", c.shear);
  c.brightness_range = j.value("brightness_range", c.brightness_range);
  c.clahe = j.value("clahe", c.clahe);
  c.seed = j.value("seed", c.seed);
  c.validate();
  return c;
}

AugmentDraw draw_augment(const AugmentConfig& cfg, int width, int height, Rng& rng) {
  AugmentDraw d;
  // fixed draw order keeps streams stable whichever ops are enabled
  const double u_h = rng.uniform(), u_v = rng.uniform(), u_rot = rng.uniform();
  const double u_sx = rng.uniform(), u_sy = rng.uniform(), u_zoom = rng.uniform();
  const double u_shear = rng.uniform(), u_bright = rng.uniform();
  d.h_flip = cfg.h_flip && u_h < 0.5;
  d.v_flip = cfg.v_flip && u_v < 0.5;
  d.rotation_deg = u_rot * cfg.rotation_deg_max;
  d.shift_x = (2.0 * u_sx - 1.0) * cfg.shift_frac * width;
  d.shift_y = (2.0 * u_sy - 1.0) * cfg.shift_frac * height;
  d.zoom = cfg.zoom_range[0] + u_zoom * (cfg.zoom_range[1] - cfg.zoom_range[0]);
  d.shear = (2.0 * u_shear - 1.0) * cfg.shear;
  d.brightness = cfg.brightness_range[0] + u_bright * (cfg.brightness_range[1] - cfg.brightness_range[0]);
  return d;
}

namespace {

template <typename T>
void flip_inplace(std::vector<T>& px, int w, int h, bool horizontal, bool vertical) {
  if (!horizontal && !vertical) return;
  std::vector<T> out(px.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int sx = horizontal ? w - 1 - x : x;
      const int sy = vertical ? h - 1 - y : y;
      out[static_cast<std::size_t>(y) * w + x] = px[static_cast<std::size_t>(sy) * w + sx];
    }
  px = std::move(out);
}

// Inverse map from output to source pixel coordinates.
struct Affine {
  double m00, m01, m10, m11, tx, ty, cx, cy;

  bool identity() const { return m00 == 1 && m01 == 0 && m10 == 0 && m11 == 1 && tx == 0 && ty == 0; }
  void source(int x, int y, double& sx, double& sy) const {
    const double u = x - cx - tx, v = y - cy - ty;
    sx = cx + m00 * u + m01 * v;
    sy = cy + m10 * u + m11 * v;
  }
};

void exact_cos_sin(double deg, double& c, double& s) {
  const double q = deg / 90.0;
  if (q == std::floor(q)) {
    static constexpr double cs[4][2] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    const int k = static_cast<int>(((static_cast<long>(q) % 4) + 4) % 4);
    c = cs[k][0];
    s = cs[k][1];
    return;
  }
  const double r = deg * std::numbers::pi / 180.0;
  c = std::cos(r);
  s = std::sin(r);
}

// forward: p' = c + t + z R Sh (p - c); inverse computed in closed form
Affine make_inverse(const AugmentDraw& d, int w, int h) {
  double c, s;
  exact_cos_sin(d.rotation_deg, c, s);
  const double k = std::tan(d.shear);
  // Sh = [1 k; 0 1] -> Sh^-1 = [1 -k; 0 1];  R^-1 = [c s; -s c]
  const double r00 = c, r01 = s, r10 = -s, r11 = c;
  Affine a;
  const double iz = 1.0 / d.zoom;
  a.m00 = (r00 - k * r10) * iz;
  a.m01 = (r01 - k * r11) * iz;
  a.m10 = r10 * iz;
  a.m11 = r11 * iz;
  a.tx = d.shift_x;
  a.ty = d.shift_y;
  a.cx = (w - 1) / 2.0;
  a.cy = (h - 1) / 2.0;
  return a;
}

double sample_bilinear_clamped(const ImageGray& img, double sx, double sy) {
  sx = std::clamp(sx, 0.0, double(img.width - 1));
  sy = std::clamp(sy, 0.0, double(img.height - 1));
  const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
  const int x1 = std::min(x0 + 1, img.width - 1), y1 = std::min(y0 + 1, img.height - 1);
  const double wx = sx - x0, wy = sy - y0;
  return (1 - wy) * ((1 - wx) * img.at(x0, y0) + wx * img.at(x1, y0)) +
         wy * ((1 - wx) * img.at(x0, y1) + wx * img.at(x1, y1));
}

}  // namespace

Sample apply_augment(const Sample& s, const AugmentDraw& d, const AugmentConfig& cfg) {
  Sample out = s;
  const int w = s.image.width, h = s.image.height;
  if (s.mask && (s.mask->width != w || s.mask->height != h)) {
    throw std::invalid_argument("augment: mask dimensions differ from image for " + s.id);
  }
  flip_inplace(out.image.pixels, w, h, d.h_flip, d.v_flip);
  if (out.mask) flip_inplace(out.mask->bits, w, h, d.h_flip, d.v_flip);

  const Affine inv = make_inverse(d, w, h);
  if (!inv.identity()) {
    const ImageGray src = out.image;
    std::optional<RoiMask> src_mask = out.mask;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        double sx, sy;
        inv.source(x, y, sx, sy);
        out.image.at(x, y) = sample_bilinear_clamped(src, sx, sy);
        if (src_mask) {
          const int nx = std::clamp(static_cast<int>(std::lround(sx)), 0, w - 1);
          const int ny = std::clamp(static_cast<int>(std::lround(sy)), 0, h - 1);
          // outside the source the mask is empty rather than edge-replicated
          const bool in = std::abs(sx - std::clamp(sx, 0.0, w - 1.0)) <= 0.5 &&
                          std::abs(sy - std::clamp(sy, 0.0, h - 1.0)) <= 0.5;
          out.mask->at(x, y) = in ? src_mask->at(nx, ny) : 0;
        }
      }
  }

  if (d.brightness != 1.0)
    for (auto& v : out.image.pixels) v *= d.brightness;
  if (cfg.clahe) out.image = clahe(out.image);
  const bool photometric = d.brightness != 1.0 || cfg.clahe || !inv.identity();
  if (photometric) out.image = normalize_minmax(out.image);
  return out;
}

Sample augment(const Sample& s, const AugmentConfig& cfg, Rng& rng) {
  const AugmentDraw d = draw_augment(cfg, s.image.width, s.image.height, rng);
  return apply_augment(s, d, cfg);
}

ImageGray clahe(const ImageGray& img, int tiles, double clip_limit) {
  constexpr int kBins = 256;
  const int w = img.width, h = img.height;
  tiles = std::max(1, std::min({tiles, w, h}));
  auto bin_of = [](double v) { return std::clamp(static_cast<int>(v * (kBins - 1) + 0.5), 0, kBins - 1); };

  // per-tile lookup tables
  std::vector<std::array<double, kBins>> lut(static_cast<std::size_t>(tiles) * tiles);
  for (int ty = 0; ty < tiles; ++ty)
    for (int tx = 0; tx < tiles; ++tx) {
      const int x0 = tx * w / tiles, x1 = (tx + 1) * w / tiles;
      const int y0 = ty * h / tiles, y1 = (ty + 1) * h / tiles;
      std::array<double, kBins> hist{};
      for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) hist[bin_of(img.at(x, y))] += 1.0;
      const double n = double(x1 - x0) * (y1 - y0);
      const double limit = std::max(1.0, clip_limit * n / kBins);
      double excess = 0.0;
      for (auto& c : hist)
        if (c > limit) {
          excess += c - limit;
          c = limit;
        }
      const double redistribute = excess / kBins;
      auto& table = lut[static_cast<std::size_t>(ty) * tiles + tx];
      double cdf = 0.0;
      for (int b = 0; b < kBins; ++b) {
        cdf += hist[b] + redistribute;
        table[b] = cdf / n;
      }
    }

  ImageGray out = img;
  const double tw = double(w) / tiles, th = double(h) / tiles;
  for (int y = 0; y < h; ++y) {
    const double gy = (y + 0.5) / th - 0.5;
    const int ty0 = std::clamp(static_cast<int>(std::floor(gy)), 0, tiles - 1);
    const int ty1 = std::min(ty0 + 1, tiles - 1);
    const double wy = std::clamp(gy - ty0, 0.0, 1.0);
    for (int x = 0; x < w; ++x) {
      const double gx = (x + 0.5) / tw - 0.5;
      const int tx0 = std::clamp(static_cast<int>(std::floor(gx)), 0, tiles - 1);
      const int tx1 = std::min(tx0 + 1, tiles - 1);
      const double wx = std::clamp(gx - tx0, 0.0, 1.0);
      const int b = bin_of(img.at(x, y));
      const double v00 = lut[static_cast<std::size_t>(ty0) * tiles + tx0][b];
      const double v01 = lut[static_cast<std::size_t>(ty0) * tiles + tx1][b];
      const double v10 = lut[static_cast<std::size_t>(ty1) * tiles + tx0][b];
      const double v11 = lut[static_cast<std::size_t>(ty1) * tiles + tx1][b];
      out.at(x, y) = (1 - wy) * ((1 - wx) * v00 + wx * v01) + wy * ((1 - wx) * v10 + wx * v11);
    }
  }
  return out;
}

}  // namespace neuroscope
