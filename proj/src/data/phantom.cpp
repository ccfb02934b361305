#include "neuroscope/data/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "neuroscope/common/rng.hpp"
#include "neuroscope/data/mask_ops.hpp"

namespace neuroscope {

Json PhantomParams::to_json() const {
  return Json{{"n_per_class", n_per_class}, {"size", size}, {"spacing_mm", spacing_mm}, {"seed", seed}};
}

PhantomParams PhantomParams::from_json(const Json& j) {
  PhantomParams p;
  p.n_per_class = j.at("n_per_class").get<int>();
  p.size = j.at("size").get<int>();
  p.spacing_mm = j.at("spacing_mm").get<double>();
  p.seed = j.at("seed").get<std::uint64_t>();
  return p;
}

std::array<std::size_t, 3> PhantomDataset::class_counts() const {
  std::array<std::size_t, 3> c{0, 0, 0};
  for (const auto& s : samples) ++c.at(static_cast<std::size_t>(s.label));
  return c;
}

AreaRange class_area_range(int label) {
  switch (label) {
    case 0:
      return {2.0, 6.0};
    case 1:
      return {1.5, 3.5};
    case 2:
      return {0.3, 0.9};
  }
  throw std::invalid_argument("label outside {0,1,2}");
}

double mask_area_cm2(const RoiMask& m, double spacing_mm) {
  return static_cast<double>(m.count()) * spacing_mm * spacing_mm / 100.0;
}

namespace {

struct Geometry {
  int size;
  double cx, cy, a, b;

  explicit Geometry(int s)
      : size(s), cx((s - 1) / 2.0), cy((s - 1) / 2.0), a(0.5 * s), b(0.48 * s) {}

  bool brain(int x, int y) const {
    const double u = (x - cx) / a, v = (y - cy) / b;
    return u * u + v * v <= 1.0;
  }
  double top() const { return cy - b; }
};

RoiMask brain_mask(const Geometry& g) {
  RoiMask m(g.size, g.size);
  for (int y = 0; y < g.size; ++y)
    for (int x = 0; x < g.size; ++x) m.at(x, y) = g.brain(x, y) ? 1 : 0;
  return m;
}

// Picks exactly `area` allowed pixels with the smallest field value; ties are
// broken in raster order so the result is deterministic.
template <typename Field>
RoiMask select_lowest(const RoiMask& allowed, std::size_t area, Field f) {
  std::vector<std::pair<double, int>> cand;
  cand.reserve(allowed.bits.size());
  for (int y = 0; y < allowed.height; ++y)
    for (int x = 0; x < allowed.width; ++x)
      if (allowed.at(x, y)) cand.emplace_back(f(x, y), y * allowed.width + x);
  RoiMask m(allowed.width, allowed.height);
  if (cand.size() < area) return m;
  std::nth_element(cand.begin(), cand.begin() + static_cast<long>(area) - 1, cand.end());
  for (std::size_t i = 0; i < area; ++i) m.bits[cand[i].second] = 1;
  return m;
}

struct PixelRange {
  std::size_t lo, hi;
};

PixelRange pixel_range(int label, double spacing_mm) {
  const AreaRange r = class_area_range(label);
  const double per_cm2 = 100.0 / (spacing_mm * spacing_mm);
  const double lo = std::ceil(r.lo * per_cm2 - 1e-9);
  const double hi = std::floor(r.hi * per_cm2 + 1e-9);
  return {static_cast<std::size_t>(std::max(lo, 0.0)), static_cast<std::size_t>(std::max(hi, 0.0))};
}

double centroid_offset_frac(const RoiMask& m) {
  double sx = 0.0;
  std::size_t n = 0;
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (m.at(x, y)) {
        sx += x + 0.5;
        ++n;
      }
  if (n == 0) return 0.0;
  return std::abs(sx / static_cast<double>(n) - m.width / 2.0) / m.width;
}

bool connected(const RoiMask& m) { return label_components(m).sizes.size() == 1; }

// Smooth mottling in roughly [-1, 1].
struct Texture {
  double kx[3], ky[3], ph[3];
  explicit Texture(Rng& rng) {
    for (int i = 0; i < 3; ++i) {
      const double f = rng.uniform(0.25, 0.6), th = rng.uniform(0.0, 2 * std::numbers::pi);
      kx[i] = f * std::cos(th);
      ky[i] = f * std::sin(th);
      ph[i] = rng.uniform(0.0, 2 * std::numbers::pi);
    }
  }
  double operator()(int x, int y) const {
    double s = 0.0;
    for (int i = 0; i < 3; ++i) s += std::sin(kx[i] * x + ky[i] * y + ph[i]);
    return s / 3.0;
  }
};

constexpr int kMaxAttempts = 64;

RoiMask glioma_mask(const Geometry& g, const RoiMask& allowed, std::size_t area, double area_cm2,
                    Rng& rng) {
  const double s = g.size;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const double side = rng.bernoulli(0.5) ? 1.0 : -1.0;
    const double x0 = g.cx + side * rng.uniform(0.16, 0.26) * s;
    const double y0 = g.cy + rng.uniform(-0.12, 0.12) * s;
    double amp[3], phase[3];
    for (int k = 0; k < 3; ++k) {
      amp[k] = rng.uniform(0.0, 0.18);
      phase[k] = rng.uniform(0.0, 2 * std::numbers::pi);
    }
    const int ix = static_cast<int>(std::lround(x0)), iy = static_cast<int>(std::lround(y0));
    if (!allowed.inside(ix, iy) || !allowed.at(ix, iy)) continue;
    RoiMask m = select_lowest(allowed, area, [&](int x, int y) {
      const double dx = x - x0, dy = y - y0;
      const double th = std::atan2(dy, dx);
      double r = 1.0;
      for (int k = 0; k < 3; ++k) r += amp[k] * std::cos((k + 2) * th + phase[k]);
      return std::hypot(dx, dy) / r;
    });
    if (m.count() != area || !connected(m)) continue;
    // smaller lesions must read as clearly hemispheric
    if (area_cm2 <= 4.0 && centroid_offset_frac(m) <= 0.12) continue;
    return m;
  }
  throw std::runtime_error("glioma phantom: could not place lesion");
}

RoiMask meningioma_mask(const Geometry& g, const RoiMask& brain, std::size_t area, Rng& rng) {
  const double s = g.size;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const double qx = g.cx + rng.uniform(-0.03, 0.03) * s;
    const double qy = g.top() - rng.uniform(0.05, 0.2) * s;
    RoiMask m = select_lowest(brain, area, [&](int x, int y) { return std::hypot(x - qx, y - qy); });
    if (m.count() == area && connected(m)) return m;
  }
  throw std::runtime_error("meningioma phantom: could not place lesion");
}

RoiMask pituitary_mask(const Geometry& g, const RoiMask& allowed, std::size_t area, Rng& rng) {
  const double s = g.size;
  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    const double x0 = g.cx + rng.uniform(-0.01, 0.01) * s;
    const double y0 = g.cy + rng.uniform(0.06, 0.14) * s;
    const double k = std::sqrt(rng.uniform(0.8, 1.25));
    RoiMask m = select_lowest(allowed, area, [&](int x, int y) {
      return std::hypot((x - x0) * k, (y - y0) / k);
    });
    if (m.count() == area && connected(m)) return m;
  }
  throw std::runtime_error("pituitary phantom: could not place lesion");
}

}  // namespace

bool phantom_brain_contains(int size, int x, int y) { return Geometry(size).brain(x, y); }

PhantomDataset generate_phantoms(int n_per_class, int size, double spacing_mm, std::uint64_t seed) {
  if (n_per_class < 1) throw std::invalid_argument("n_per_class must be >= 1");
  if (size < 32) throw std::invalid_argument("phantom size must be >= 32");
  if (!(spacing_mm > 0.0)) throw std::invalid_argument("spacing_mm must be positive");

  const Geometry geo(size);
  const RoiMask brain = brain_mask(geo);
  const RoiMask inner1 = erode8(brain, 1);
  const RoiMask inner2 = erode8(brain, 2);
  const std::size_t brain_px = brain.count();

  // Feasibility per class: enough pixels to draw and enough room to place.
  const double room[3] = {0.88 * static_cast<double>(inner1.count()), 0.6 * static_cast<double>(brain_px),
                          0.3 * static_cast<double>(inner2.count())};
  PixelRange ranges[3];
  for (int c = 0; c < 3; ++c) {
    ranges[c] = pixel_range(c, spacing_mm);
    if (ranges[c].lo > ranges[c].hi || ranges[c].lo < 16 || static_cast<double>(ranges[c].hi) > room[c]) {
      const AreaRange r = class_area_range(c);
      char buf[200];
      std::snprintf(buf, sizeof buf,
                    "requested %s lesion area [%.1f, %.1f] cm^2 is unachievable at %dx%d px, %.3g mm/px",
                    label_name(c).c_str(), r.lo, r.hi, size, size, spacing_mm);
      throw std::invalid_argument(buf);
    }
  }

  PhantomDataset ds;
  ds.params = PhantomParams{n_per_class, size, spacing_mm, seed};
  const int total = 3 * n_per_class;
  ds.samples.resize(static_cast<std::size_t>(total));
  for (int i = 0; i < total; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    const int label = i % 3;
    const int instance = i / 3;
    const PixelRange pr = ranges[label];
    const std::size_t area = pr.lo + static_cast<std::size_t>(rng.below(pr.hi - pr.lo + 1));
    const double area_cm2 = static_cast<double>(area) * spacing_mm * spacing_mm / 100.0;

    RoiMask mask;
    switch (label) {
      case 0:
        mask = glioma_mask(geo, inner1, area, area_cm2, rng);
        break;
      case 1:
        mask = meningioma_mask(geo, brain, area, rng);
        break;
      default:
        mask = pituitary_mask(geo, inner2, area, rng);
        break;
    }

    ImageGray img(size, size, spacing_mm, 0.04);
    const double phi = rng.uniform(0.0, 2 * std::numbers::pi);
    const double gx = 0.06 * std::cos(phi), gy = 0.06 * std::sin(phi);
    const double half = size / 2.0;
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x)
        if (brain.at(x, y)) img.at(x, y) = 0.30 + gx * (x - geo.cx) / half + gy * (y - geo.cy) / half;

    const Texture tex(rng);
    if (label == 0) {
      const bool ring = instance % 2 == 0;
      const RoiMask core = erode8(mask, 3);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
          if (!mask.at(x, y)) continue;
          if (ring) {
            img.at(x, y) = core.at(x, y) ? 0.32 + 0.05 * tex(x, y) : 0.95 + 0.03 * tex(x, y);
          } else {
            img.at(x, y) = 0.62 + 0.10 * tex(x, y);
          }
        }
    } else {
      const double level = label == 1 ? 0.88 : 0.75;
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
          if (mask.at(x, y)) img.at(x, y) = level;
    }
    for (auto& v : img.pixels) v += rng.normal(0.0, 0.02);

    // quantize to the 16-bit grid so that PGM storage is lossless
    img = normalize_minmax(img);
    for (auto& v : img.pixels) v = std::round(v * 65535.0) / 65535.0;

    Sample& s = ds.samples[static_cast<std::size_t>(i)];
    char id[32];
    std::snprintf(id, sizeof id, "ph%05d", i);
    s.id = id;
    s.label = label;
    s.image = std::move(img);
    s.mask = std::move(mask);
  }
  return ds;
}

}  // namespace neuroscope
