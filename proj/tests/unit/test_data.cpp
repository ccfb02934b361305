#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "neuroscope/common/json_util.hpp"
#include "neuroscope/data/augment.hpp"
#include "neuroscope/data/dataset_io.hpp"
#include "neuroscope/data/mask_ops.hpp"
#include "neuroscope/data/phantom.hpp"
#include "tempdir.hpp"

using namespace neuroscope;
using neuroscope::testing::TempDir;

namespace {

Sample random_sample(Rng& rng, int size = 16) {
  Sample s;
  s.id = "s";
  s.image = ImageGray(size, size, 1.0);
  for (auto& v : s.image.pixels) v = rng.uniform();
  s.mask = RoiMask(size, size);
  for (auto& b : s.mask->bits) b = rng.bernoulli(0.3) ? 1 : 0;
  return s;
}

const PhantomDataset& small_phantoms() {
  static const PhantomDataset ds = generate_phantoms(10, 64, kDefaultSpacingMm, 42);
  return ds;
}

}  // namespace

TEST(Normalize, WorkedExample) {
  ImageGray img(8, 8, 1.0, 0.0);
  img.pixels[1] = 128;
  img.pixels[2] = 255;
  const ImageGray n = normalize_minmax(img);
  EXPECT_EQ(n.pixels[0], 0.0);
  EXPECT_NEAR(n.pixels[1], 128.0 / 255.0, 1e-15);
  EXPECT_EQ(n.pixels[2], 1.0);
}

TEST(Normalize, IdempotentOnUnitRange) {
  Rng rng(3);
  ImageGray img(9, 9, 1.0);
  for (auto& v : img.pixels) v = rng.uniform();
  img.pixels[0] = 0.0;
  img.pixels[1] = 1.0;
  EXPECT_EQ(normalize_minmax(img), img);
}

TEST(Normalize, ConstantImageMapsToZero) {
  const ImageGray n = normalize_minmax(ImageGray(8, 8, 1.0, 7.0));
  for (double v : n.pixels) EXPECT_EQ(v, 0.0);
}

TEST(Normalize, RangeIsUnitInterval) {
  Rng rng(4);
  for (int t = 0; t < 50; ++t) {
    ImageGray img(8, 10, 1.0);
    for (auto& v : img.pixels) v = rng.uniform(-100, 300);
    const ImageGray n = normalize_minmax(img);
    EXPECT_EQ(*std::min_element(n.pixels.begin(), n.pixels.end()), 0.0);
    EXPECT_EQ(*std::max_element(n.pixels.begin(), n.pixels.end()), 1.0);
  }
}

TEST(Resize, SameSizeIsIdentity) {
  Rng rng(5);
  ImageGray img(12, 12, 0.7);
  for (auto& v : img.pixels) v = rng.uniform();
  const ImageGray r = resize_bilinear(img, 12);
  ASSERT_EQ(r.width, 12);
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(r.pixels[i], img.pixels[i], 1e-12);
}

TEST(Resize, CheckerboardToOnePixelSamplesCorner) {
  const std::vector<double> px{0, 1, 1, 0};
  const auto out = resample_bilinear(px, 2, 2, 1, 1);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0], 0.0);
}

TEST(Resize, CornerAlignedMidpoint) {
  // 2 -> 3 samples positions 0, 0.5, 1
  const std::vector<double> px{0, 4, 8, 12};
  const auto out = resample_bilinear(px, 2, 2, 3, 3);
  EXPECT_DOUBLE_EQ(out[1], 2.0);
  EXPECT_DOUBLE_EQ(out[4], 6.0);
  EXPECT_DOUBLE_EQ(out[8], 12.0);
}

TEST(Resize, LinearRampIsReproducedExactly) {
  // bilinear interpolation of an affine function is exact
  ImageGray img(10, 10, 1.0);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x) img.at(x, y) = 2.0 * x - 0.5 * y + 1.0;
  const ImageGray r = resize_bilinear(img, 19);
  for (int y = 0; y < 19; ++y)
    for (int x = 0; x < 19; ++x) EXPECT_NEAR(r.at(x, y), 2.0 * (x * 9.0 / 18) - 0.5 * (y * 9.0 / 18) + 1.0, 1e-12);
}

TEST(Resize, RejectsSmallTarget) {
  EXPECT_THROW(resize_bilinear(ImageGray(8, 8, 1.0), 7), std::invalid_argument);
}

TEST(Grayscale, WeightsSumToOne) {
  const std::vector<Rgb> px(64, Rgb{255, 255, 255});
  const ImageGray g = to_grayscale(px, 8, 8);
  for (double v : g.pixels) EXPECT_NEAR(v, 255.0, 1e-12);
  const std::vector<Rgb> red(64, Rgb{1, 0, 0});
  EXPECT_NEAR(to_grayscale(red, 8, 8).pixels[0], 0.299, 1e-15);
}

TEST(Image, ValidateRejectsTinyAndBadSpacing) {
  EXPECT_THROW(ImageGray(7, 8, 1.0).validate(), std::invalid_argument);
  EXPECT_THROW(ImageGray(8, 8, 0.0).validate(), std::invalid_argument);
  EXPECT_NO_THROW(ImageGray(8, 8, 0.5).validate());
}

TEST(Labels, NamesRoundTrip) {
  for (int c = 0; c < 3; ++c) EXPECT_EQ(label_from_name(label_name(c)), c);
  EXPECT_THROW(label_from_name("astro"), std::invalid_argument);
}

TEST(Pnm, PgmRoundTrip16Bit) {
  TempDir dir;
  Rng rng(6);
  ImageGray img(13, 9, 1.0);
  for (auto& v : img.pixels) v = static_cast<double>(rng.below(65536)) / 65535.0;
  write_pgm(dir / "a.pgm", img);
  EXPECT_EQ(read_pgm(dir / "a.pgm"), img);
}

TEST(Pnm, PgmRoundTrip8Bit) {
  TempDir dir;
  ImageGray img(8, 8, 1.0);
  for (std::size_t i = 0; i < img.size(); ++i) img.pixels[i] = static_cast<double>(i * 4 % 256) / 255.0;
  write_pgm(dir / "a.pgm", img, 255);
  EXPECT_EQ(read_pgm(dir / "a.pgm"), img);
  EXPECT_EQ(std::filesystem::file_size(dir / "a.pgm"), std::string("P5\n8 8\n255\n").size() + 64);
}

TEST(Pnm, PbmRoundTripWithRowPadding) {
  TempDir dir;
  Rng rng(7);
  RoiMask m(11, 5);  // 11 bits -> 2 bytes per row
  for (auto& b : m.bits) b = rng.bernoulli(0.5);
  write_pbm(dir / "m.pbm", m);
  EXPECT_EQ(read_pbm(dir / "m.pbm"), m);
}

TEST(Pnm, TruncatedFileIsRejected) {
  TempDir dir;
  std::ofstream(dir / "t.pgm", std::ios::binary) << "P5\n8 8\n255\nabc";
  EXPECT_THROW(read_pgm(dir / "t.pgm"), DatasetError);
  std::ofstream(dir / "w.pgm", std::ios::binary) << "P2\n8 8\n255\n";
  EXPECT_THROW(read_pgm(dir / "w.pgm"), DatasetError);
}

TEST(Dataset, SaveLoadRoundTripIsExact) {
  TempDir dir;
  save_dataset(small_phantoms(), dir.path());
  EXPECT_EQ(load_dataset(dir.path()), small_phantoms());
}

TEST(Dataset, UnknownLabelNamesTheFile) {
  TempDir dir;
  save_dataset(small_phantoms(), dir.path());
  const std::string id = small_phantoms().samples[4].id;
  const auto meta = dir / ("meta/" + id + ".json");
  write_json_file(meta, Json{{"label", "astro"}, {"spacing_mm", 0.5}});
  try {
    load_dataset(dir.path());
    FAIL() << "expected DatasetError";
  } catch (const DatasetError& e) {
    EXPECT_NE(std::string(e.what()).find(meta.string()), std::string::npos) << e.what();
  }
}

TEST(Dataset, MissingSidecarAndMaskMismatch) {
  {
    TempDir dir;
    save_dataset(small_phantoms(), dir.path());
    std::filesystem::remove(dir / ("meta/" + small_phantoms().samples[0].id + ".json"));
    EXPECT_THROW(load_dataset(dir.path()), DatasetError);
  }
  {
    TempDir dir;
    save_dataset(small_phantoms(), dir.path());
    write_pbm(dir / ("masks/" + small_phantoms().samples[1].id + ".pbm"), RoiMask(32, 64));
    EXPECT_THROW(load_dataset(dir.path()), DatasetError);
  }
  {
    TempDir dir;
    EXPECT_THROW(load_dataset(dir.path()), DatasetError);
  }
}

TEST(Phantoms, DeterministicUnderSeed) {
  EXPECT_EQ(generate_phantoms(10, 64, kDefaultSpacingMm, 42), small_phantoms());
  EXPECT_NE(generate_phantoms(10, 64, kDefaultSpacingMm, 43), small_phantoms());
}

TEST(Phantoms, ExactClassBalanceAndMasks) {
  const auto& ds = small_phantoms();
  EXPECT_EQ(ds.class_counts(), (std::array<std::size_t, 3>{10, 10, 10}));
  for (const auto& s : ds.samples) {
    ASSERT_TRUE(s.mask);
    EXPECT_EQ(s.mask->width, s.image.width);
    EXPECT_EQ(s.image.spacing_mm, kDefaultSpacingMm);
  }
}

TEST(Phantoms, AreasFallInClassIntervals) {
  const auto ds = generate_phantoms(40, 64, kDefaultSpacingMm, 9);
  for (const auto& s : ds.samples) {
    const double a = mask_area_cm2(*s.mask, s.image.spacing_mm);
    const AreaRange r = class_area_range(s.label);
    EXPECT_GE(a, r.lo) << s.id;
    EXPECT_LE(a, r.hi) << s.id;
    if (s.label == 2) {
      EXPECT_LT(a, 1.0) << s.id;
    }
  }
}

TEST(Phantoms, LesionsSitInsideTheBrain) {
  for (const auto& s : small_phantoms().samples)
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x)
        if (s.mask->at(x, y)) {
          EXPECT_TRUE(phantom_brain_contains(64, x, y)) << s.id;
        }
}

TEST(Phantoms, PituitaryIsMidlineGliomaOffMidline) {
  for (const auto& s : generate_phantoms(30, 64, kDefaultSpacingMm, 11).samples) {
    double cx = 0;
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) cx += s.mask->at(x, y) * x;
    cx /= static_cast<double>(s.mask->count());
    const double off = std::abs(cx - 31.5);
    if (s.label == 2) {
      EXPECT_LT(off, 4.0) << s.id;
    }
    // large diffuse lesions may spread towards the midline
    if (s.label == 0 && mask_area_cm2(*s.mask, s.image.spacing_mm) <= 4.0) {
      EXPECT_GT(off, 0.12 * 64) << s.id;
    }
  }
}

TEST(Phantoms, ErrorsOnBadParameters) {
  EXPECT_THROW(generate_phantoms(0, 64, 0.5, 1), std::invalid_argument);
  EXPECT_THROW(generate_phantoms(1, 31, 0.5, 1), std::invalid_argument);
  // at 10 mm/px a pituitary lesion is under one pixel
  EXPECT_THROW(generate_phantoms(1, 64, 10.0, 1), std::invalid_argument);
  // 6 cm^2 at 0.5 mm/px is 2400 px, more than a 32x32 image holds
  EXPECT_THROW(generate_phantoms(1, 32, 0.5, 1), std::invalid_argument);
}

TEST(Augment, IdentityConfigIsNoOp) {
  Rng rng(1);
  const Sample s = random_sample(rng);
  for (int t = 0; t < 10; ++t) EXPECT_EQ(augment(s, AugmentConfig::identity(), rng), s);
}

TEST(Augment, HorizontalFlipMapsPixelsAndIsInvolution) {
  Rng rng(2);
  const Sample s = random_sample(rng);
  AugmentDraw d;
  d.h_flip = true;
  const auto cfg = AugmentConfig::identity();
  const Sample f = apply_augment(s, d, cfg);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      EXPECT_EQ(f.image.at(x, y), s.image.at(15 - x, y));
      EXPECT_EQ(f.mask->at(x, y), s.mask->at(15 - x, y));
    }
  EXPECT_EQ(apply_augment(f, d, cfg), s);
}

TEST(Augment, RightAngleRotationsPreserveMaskCount) {
  Rng rng(3);
  for (int size : {16, 17}) {
    const Sample s = random_sample(rng, size);
    for (double deg : {90.0, 180.0, 270.0}) {
      AugmentDraw d;
      d.rotation_deg = deg;
      const Sample r = apply_augment(s, d, AugmentConfig::identity());
      EXPECT_EQ(r.mask->count(), s.mask->count()) << deg;
      EXPECT_EQ(r.label, s.label);
    }
    AugmentDraw d90;
    d90.rotation_deg = 90.0;
    Sample r = s;
    for (int k = 0; k < 4; ++k) r = apply_augment(r, d90, AugmentConfig::identity());
    EXPECT_EQ(r.mask, s.mask);
  }
}

TEST(Augment, MaskFollowsImageGeometry) {
  // a mask equal to the thresholded image stays consistent with the image
  // under a pure geometric transform with nearest-neighbour sampling.
  Sample s;
  s.id = "g";
  s.image = ImageGray(32, 32, 1.0, 0.0);
  s.mask = RoiMask(32, 32);
  for (int y = 8; y < 14; ++y)
    for (int x = 18; x < 26; ++x) {
      s.image.at(x, y) = 1.0;
      s.mask->at(x, y) = 1;
    }
  AugmentDraw d;
  d.rotation_deg = 90;
  d.shift_x = 3;
  d.shift_y = -2;
  const Sample r = apply_augment(s, d, AugmentConfig::identity());
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x) EXPECT_EQ(r.mask->at(x, y), r.image.at(x, y) > 0.5 ? 1 : 0) << x << "," << y;
}

TEST(Augment, PhotometricOpsLeaveMaskAndLabel) {
  Rng rng(4);
  const Sample s = random_sample(rng);
  AugmentDraw d;
  d.brightness = 0.4;
  AugmentConfig cfg = AugmentConfig::identity();
  cfg.clahe = true;
  const Sample r = apply_augment(s, d, cfg);
  EXPECT_EQ(r.mask, s.mask);
  EXPECT_EQ(r.label, s.label);
  EXPECT_EQ(*std::min_element(r.image.pixels.begin(), r.image.pixels.end()), 0.0);
  EXPECT_EQ(*std::max_element(r.image.pixels.begin(), r.image.pixels.end()), 1.0);
}

TEST(Augment, DrawsRespectRanges) {
  Rng rng(5);
  const AugmentConfig cfg;
  for (int t = 0; t < 2000; ++t) {
    const AugmentDraw d = draw_augment(cfg, 64, 64, rng);
    EXPECT_GE(d.rotation_deg, 0.0);
    EXPECT_LE(d.rotation_deg, 270.0);
    EXPECT_LE(std::abs(d.shift_x), 0.2 * 64);
    EXPECT_LE(std::abs(d.shift_y), 0.2 * 64);
    EXPECT_GE(d.zoom, 0.1);
    EXPECT_LE(d.zoom, 1.0);
    EXPECT_LE(std::abs(d.shear), 0.2);
    EXPECT_GE(d.brightness, 0.2);
    EXPECT_LE(d.brightness, 1.0);
  }
}

TEST(Augment, DeterministicUnderSeedAndValidatesConfig) {
  Rng a(9), b(9), src(1);
  const Sample s = random_sample(src, 24);
  EXPECT_EQ(augment(s, AugmentConfig{}, a), augment(s, AugmentConfig{}, b));
  AugmentConfig bad;
  bad.shift_frac = 1.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  EXPECT_EQ(AugmentConfig::from_json(AugmentConfig{}.to_json()).to_json(), AugmentConfig{}.to_json());
}

TEST(Clahe, ConstantImageStaysConstantAndRangeHolds) {
  const ImageGray c = clahe(ImageGray(32, 32, 1.0, 0.5));
  for (double v : c.pixels) EXPECT_NEAR(v, c.pixels[0], 1e-12);
  Rng rng(8);
  ImageGray img(40, 40, 1.0);
  for (auto& v : img.pixels) v = rng.uniform() * 0.3;
  for (double v : clahe(img).pixels) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(MaskOps, ContourOfSquareAndErosion) {
  RoiMask m(7, 7);
  for (int y = 2; y < 5; ++y)
    for (int x = 2; x < 5; ++x) m.at(x, y) = 1;
  EXPECT_EQ(contour(m).count(), 8u);
  const RoiMask e = erode8(m);
  EXPECT_EQ(e.count(), 1u);
  EXPECT_EQ(e.at(3, 3), 1);
}

TEST(MaskOps, ComponentsAndLargest) {
  RoiMask m(6, 3);
  m.at(0, 0) = m.at(1, 0) = 1;          // size 2
  m.at(4, 0) = m.at(4, 1) = m.at(5, 1) = 1;  // size 3
  m.at(2, 2) = 1;                        // diagonal to nothing; size 1
  const Components c = label_components(m);
  ASSERT_EQ(c.sizes.size(), 3u);
  EXPECT_EQ(c.sizes[0], 2u);
  EXPECT_EQ(c.sizes[1], 3u);
  const RoiMask l = largest_component(m);
  EXPECT_EQ(l.count(), 3u);
  EXPECT_EQ(l.at(5, 1), 1);
}
