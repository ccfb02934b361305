#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "neuroscope/common/json_util.hpp"
#include "neuroscope/data/image.hpp"

namespace neuroscope {

inline constexpr int kDefaultImageSize = 64;
// 0.5 mm/px so 1 cm^2 = 400 px at 64x64; see README for why not 1 mm/px.
inline constexpr double kDefaultSpacingMm = 0.5;

struct PhantomParams {
  int n_per_class = 120;
  int size = kDefaultImageSize;
  double spacing_mm = kDefaultSpacingMm;
  std::uint64_t seed = 0;

  Json to_json() const;
  static PhantomParams from_json(const Json& j);
  bool operator==(const PhantomParams&) const = default;
};

struct PhantomDataset {
  std::vector<Sample> samples;
  std::optional<PhantomParams> params;  // set when produced by the generator

  std::array<std::size_t, 3> class_counts() const;
  bool operator==(const PhantomDataset&) const = default;
};

// Lesion area interval (cm^2) per class.
struct AreaRange {
  double lo, hi;
};
AreaRange class_area_range(int label);

double mask_area_cm2(const RoiMask& m, double spacing_mm);

// Deterministic phantom set, samples interleaved by class (id index i has
// label i % 3). Throws std::invalid_argument when n_per_class < 1, size < 32,
// or a class's lesion area cannot be realised at this size/spacing.
PhantomDataset generate_phantoms(int n_per_class, int size, double spacing_mm, std::uint64_t seed);
inline PhantomDataset generate_phantoms(const PhantomParams& p) {
  return generate_phantoms(p.n_per_class, p.size, p.spacing_mm, p.seed);
}

// Returns true when the brain ellipse pixel membership holds at (x, y).
bool phantom_brain_contains(int size, int x, int y);

}  // namespace neuroscope
