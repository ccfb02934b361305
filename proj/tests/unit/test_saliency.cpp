#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "neuroscope/common/json_util.hpp"
#include "neuroscope/data/dataset_io.hpp"
#include "neuroscope/data/phantom.hpp"
#include "neuroscope/saliency/gradcam.hpp"
#include "neuroscope/saliency/overlap.hpp"
#include "neuroscope/saliency/render.hpp"
#include "oracles.hpp"
#include "tempdir.hpp"

using namespace neuroscope;
using namespace neuroscope::testing;

namespace {

RoiMask random_mask(Rng& rng, int w, int h, double p) {
  RoiMask m(w, h);
  for (auto& b : m.bits) b = rng.bernoulli(p);
  return m;
}

// Reference weights evaluated straight from the formula.
double reference_weight(const std::vector<double>& A, const std::vector<double>& g, std::size_t k, std::size_t plane) {
  double sum_a = 0;
  for (std::size_t i = 0; i < plane; ++i) sum_a += A[k * plane + i];
  double w = 0;
  for (std::size_t i = 0; i < plane; ++i) {
    const double gi = g[k * plane + i];
    const double den = 2 * gi * gi + sum_a * gi * gi * gi;
    const double alpha = std::abs(den) < kAlphaEpsilon ? 0.0 : gi * gi / den;
    w += alpha * std::max(gi, 0.0);
  }
  return w;
}

}  // namespace

TEST(GradCamPP, UniformFeatureMapNormalisesToZeros) {
  const std::vector<double> A(16, 0.7), g(16, 1.0 / 16);
  const auto raw = gradcam_pp_raw(A, g, 1, 4, 4);
  for (double v : raw) EXPECT_NEAR(v, raw[0], 1e-15);
  EXPECT_GT(raw[0], 0.0);
  for (double v : upsample_normalize(raw, 4, 4, 16, 16)) EXPECT_EQ(v, 0.0);
}

TEST(GradCamPP, ScoreIndependentOfActivationGivesZeroMap) {
  Rng rng(1);
  std::vector<double> A(2 * 9);
  for (auto& a : A) a = rng.uniform(0, 2);
  const std::vector<double> g(A.size(), 0.0);
  for (double w : gradcam_pp_weights(A, g, 2, 3, 3)) EXPECT_EQ(w, 0.0);
  for (double v : gradcam_pp_raw(A, g, 2, 3, 3)) EXPECT_EQ(v, 0.0);
}

TEST(GradCamPP, TwoChannelHandEvaluation) {
  // S = sum A^1: g^1 = 1 everywhere, g^2 = 0. alpha^1 = 1 / (2 + sum A^1),
  // w_1 = hw / (2 + sum A^1), w_2 = 0, map = w_1 A^1.
  Rng rng(2);
  const std::size_t h = 3, w = 4, plane = h * w;
  std::vector<double> A(2 * plane), g(2 * plane, 0.0);
  for (auto& a : A) a = rng.uniform(0.1, 2);
  std::fill(g.begin(), g.begin() + plane, 1.0);
  const double sum1 = std::accumulate(A.begin(), A.begin() + plane, 0.0);
  const auto weights = gradcam_pp_weights(A, g, 2, h, w);
  EXPECT_NEAR(weights[0], double(plane) / (2 + sum1), 1e-14);
  EXPECT_EQ(weights[1], 0.0);
  const auto raw = gradcam_pp_raw(A, g, 2, h, w);
  for (std::size_t i = 0; i < plane; ++i) EXPECT_NEAR(raw[i], weights[0] * A[i], 1e-14);
}

TEST(GradCamPP, WeightsMatchFormulaOnRandomInputs) {
  Rng rng(3);
  for (int t = 0; t < 100; ++t) {
    const std::size_t k = 1 + rng.below(4), h = 1 + rng.below(5), w = 1 + rng.below(5), plane = h * w;
    std::vector<double> A(k * plane), g(k * plane);
    for (auto& a : A) a = rng.uniform(0, 3);
    for (auto& x : g) x = rng.bernoulli(0.1) ? 0.0 : rng.uniform(-1, 1);
    const auto weights = gradcam_pp_weights(A, g, k, h, w);
    const auto raw = gradcam_pp_raw(A, g, k, h, w);
    for (std::size_t c = 0; c < k; ++c) EXPECT_NEAR(weights[c], reference_weight(A, g, c, plane), 1e-12);
    for (std::size_t i = 0; i < plane; ++i) {
      double s = 0;
      for (std::size_t c = 0; c < k; ++c) s += weights[c] * A[c * plane + i];
      EXPECT_NEAR(raw[i], std::max(s, 0.0), 1e-12);
    }
  }
}

TEST(GradCamPP, NormalisationAbsorbsPositiveGain) {
  Rng rng(4);
  std::vector<double> raw(25);
  for (auto& v : raw) v = rng.uniform(0, 5);
  const auto a = upsample_normalize(raw, 5, 5, 20, 20);
  for (auto& v : raw) v *= 37.5;
  const auto b = upsample_normalize(raw, 5, 5, 20, 20);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
  EXPECT_EQ(*std::max_element(a.begin(), a.end()), 1.0);
  EXPECT_EQ(*std::min_element(a.begin(), a.end()), 0.0);
}

class GradCamModels : public ::testing::TestWithParam<Family> {};

TEST_P(GradCamModels, MatchesFiniteDifferenceOracle) {
  Model m = Model::build(ModelSpec::defaults(GetParam(), 32), 21);
  Rng rng(5);
  randomize_biases(m, rng, 0.1);
  const auto ds = generate_phantoms(1, 64, kDefaultSpacingMm, 3);
  for (const auto& orig : ds.samples) {
    Sample s = orig;
    s.image = preprocess(orig.image, 32);
    for (int cls = 0; cls < 3; ++cls) {
      const SaliencyMap sm = gradcam_pp(m, s.image, cls);
      // oracle: g by central differences of the (linear) head at cam_target
      Tensor x(Shape{1, 1, 32, 32}, s.image.pixels);
      const Tensor A = m.forward(nullptr, x).activations.at("cam_target");
      const std::size_t k = A.dim(1), h = A.dim(2), w = A.dim(3);
      auto score = [&] { return m.head_logits(nullptr, A).data()[static_cast<std::size_t>(cls)]; };
      std::vector<double> g(A.numel());
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = central_difference(A, i, score, 1e-4);
      const std::vector<double> av(A.data().begin(), A.data().end());
      const auto want = upsample_normalize(gradcam_pp_raw(av, g, k, h, w), static_cast<int>(w), static_cast<int>(h), 32, 32);
      ASSERT_EQ(sm.values.size(), want.size());
      double worst = 0;
      for (std::size_t i = 0; i < want.size(); ++i) worst = std::max(worst, std::abs(sm.values[i] - want[i]));
      EXPECT_LT(worst, 1e-6) << s.id << " class " << cls;
      EXPECT_EQ(sm.source_class, cls);
      EXPECT_EQ(sm.layer, "cam_target");
      EXPECT_EQ(sm.binary.count(), static_cast<std::size_t>(std::ceil(0.2 * 32 * 32)));
      for (double v : sm.values) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
    }
  }
}

TEST_P(GradCamModels, RejectsBadInputs) {
  Model m = Model::build(ModelSpec::defaults(GetParam(), 32), 22);
  const ImageGray img(32, 32, 1.0, 0.5);
  EXPECT_THROW(gradcam_pp(m, img, 3), std::invalid_argument);
  EXPECT_THROW(gradcam_pp(m, img, -1), std::invalid_argument);
  EXPECT_THROW(gradcam_pp(m, ImageGray(16, 16, 1.0), 0), std::invalid_argument);
  m.parameters()[0].tensor.data()[0] = std::nan("");
  EXPECT_THROW(gradcam_pp(m, img, 0), std::invalid_argument);
}

INSTANTIATE_TEST_SUITE_P(Families, GradCamModels, ::testing::Values(Family::mobile_mini, Family::dense_mini),
                         [](const auto& info) { return to_string(info.param); });

TEST(CombineMaps, MeanOfMembersRenormalised) {
  SaliencyMap a, b;
  a.width = b.width = 4;
  a.height = b.height = 3;
  a.values = {0, 0.2, 0.4, 1, 0, 0, 0, 0, 0, 0, 0, 0};
  b.values = {0, 0.6, 0.4, 0, 0, 0, 0, 0, 0, 0, 0, 0.5};
  const SaliencyMap c = combine_maps({a, b}, 0.25);
  // means 0, .4, .4, .5, ..., .25 -> divide by .5
  EXPECT_NEAR(c.values[1], 0.8, 1e-15);
  EXPECT_NEAR(c.values[3], 1.0, 1e-15);
  EXPECT_NEAR(c.values[11], 0.5, 1e-15);
  EXPECT_EQ(c.binary.count(), 3u);
  EXPECT_TRUE(c.binary.bits[1] && c.binary.bits[2] && c.binary.bits[3]);
  b.width = 3;
  EXPECT_THROW(combine_maps({a, b}), std::invalid_argument);
  EXPECT_THROW(combine_maps({}), std::invalid_argument);
}

TEST(Threshold, WorkedExamples) {
  const std::vector<double> v{0.1, 0.9, 0.3, 0.8, 0.2, 0.0, 0.5, 0.4, 0.6, 0.7};
  const RoiMask m = threshold_top_fraction(v, 5, 2, 0.2);
  EXPECT_EQ(m.count(), 2u);
  EXPECT_TRUE(m.bits[1] && m.bits[3]);
  EXPECT_EQ(threshold_top_fraction(v, 5, 2, 1.0).count(), 10u);
  const RoiMask flat = threshold_top_fraction(std::vector<double>(10, 0.5), 5, 2, 0.2);
  EXPECT_TRUE(flat.bits[0] && flat.bits[1]);
  EXPECT_EQ(flat.count(), 2u);
  EXPECT_THROW(threshold_top_fraction(v, 5, 2, 0.0), std::invalid_argument);
  EXPECT_THROW(threshold_top_fraction(v, 5, 2, 1.01), std::invalid_argument);
  EXPECT_THROW(threshold_top_fraction(v, 4, 2, 0.2), std::invalid_argument);
}

TEST(Threshold, MatchesBruteForceWithTies) {
  Rng rng(6);
  for (int t = 0; t < 300; ++t) {
    const int w = 1 + static_cast<int>(rng.below(12)), h = 1 + static_cast<int>(rng.below(12));
    const std::size_t n = static_cast<std::size_t>(w) * h;
    std::vector<double> v(n);
    for (auto& x : v) x = static_cast<double>(rng.below(5)) / 4.0;  // many ties
    const double frac = rng.uniform(0.01, 1.0);
    const RoiMask m = threshold_top_fraction(v, w, h, frac);
    // exact count via integer arithmetic on the smallest k with k >= frac * n
    std::size_t want = 0;
    while (static_cast<double>(want) < frac * static_cast<double>(n) * (1 - 1e-12)) ++want;
    ASSERT_EQ(m.count(), want);
    // oracle: pixel i is kept iff fewer than `want` pixels precede it in
    // (value desc, index asc) order
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t before = 0;
      for (std::size_t j = 0; j < n; ++j)
        if (v[j] > v[i] || (v[j] == v[i] && j < i)) ++before;
      EXPECT_EQ(m.bits[i], before < want ? 1 : 0);
    }
  }
}

TEST(Overlap, WorkedExamples) {
  RoiMask g(20, 20), m(20, 20);
  for (int i = 0; i < 100; ++i) g.bits[static_cast<std::size_t>(i)] = 1;
  for (int i = 50; i < 150; ++i) m.bits[static_cast<std::size_t>(i)] = 1;
  OverlapScores s = overlap(g, m);
  EXPECT_DOUBLE_EQ(s.dice, 0.5);
  EXPECT_DOUBLE_EQ(s.iou, 1.0 / 3.0);
  s = overlap(g, g);
  EXPECT_EQ(s.dice, 1.0);
  EXPECT_EQ(s.iou, 1.0);
  EXPECT_FALSE(s.both_empty);
  RoiMask d(20, 20);
  for (int i = 200; i < 250; ++i) d.bits[static_cast<std::size_t>(i)] = 1;
  s = overlap(g, d);
  EXPECT_EQ(s.dice, 0.0);
  EXPECT_EQ(s.iou, 0.0);
  s = overlap(RoiMask(20, 20), RoiMask(20, 20));
  EXPECT_EQ(s.dice, 1.0);
  EXPECT_EQ(s.iou, 1.0);
  EXPECT_TRUE(s.both_empty);
  EXPECT_TRUE(s.to_json().at("both_empty").get<bool>());
  EXPECT_THROW(overlap(g, RoiMask(20, 19)), std::invalid_argument);
}

TEST(Overlap, SetIdentityAndBruteForce) {
  Rng rng(7);
  for (int t = 0; t < 1000; ++t) {
    const RoiMask g = random_mask(rng, 9, 7, rng.uniform()), m = random_mask(rng, 9, 7, rng.uniform());
    std::size_t inter = 0, uni = 0, sg = 0, sm = 0;
    for (std::size_t i = 0; i < g.bits.size(); ++i) {
      inter += g.bits[i] && m.bits[i];
      uni += g.bits[i] || m.bits[i];
      sg += g.bits[i];
      sm += m.bits[i];
    }
    const OverlapScores s = overlap(g, m);
    if (uni == 0) continue;
    EXPECT_DOUBLE_EQ(s.dice, 2.0 * double(inter) / double(sg + sm));
    EXPECT_DOUBLE_EQ(s.iou, double(inter) / double(uni));
    EXPECT_NEAR(s.iou, s.dice / (2 - s.dice), 1e-12);
    EXPECT_LE(s.iou, s.dice);
  }
}

TEST(Render, ZeroMapIsGrayscaleBase) {
  Rng rng(8);
  ImageGray img(10, 10, 1.0);
  for (auto& v : img.pixels) v = rng.uniform();
  const RgbImage out = render_overlay(img, std::vector<double>(100, 0.0));
  for (std::size_t i = 0; i < 100; ++i) {
    const auto g = static_cast<std::uint8_t>(std::lround(img.pixels[i] * 255.0));
    EXPECT_EQ(out.rgb[3 * i], g);
    EXPECT_EQ(out.rgb[3 * i + 1], g);
    EXPECT_EQ(out.rgb[3 * i + 2], g);
  }
}

TEST(Render, DeterministicBytesAndRedContour) {
  ImageGray img(7, 7, 1.0, 0.5);
  std::vector<double> map(49);
  for (std::size_t i = 0; i < 49; ++i) map[i] = double(i) / 48.0;
  RoiMask mask(7, 7);
  for (int y = 2; y < 5; ++y)
    for (int x = 2; x < 5; ++x) mask.at(x, y) = 1;
  const RgbImage a = render_overlay(img, std::vector<double>(49, 0.0), mask);
  EXPECT_EQ(render_overlay(img, std::vector<double>(49, 0.0), mask), a);
  int red = 0;
  for (std::size_t i = 0; i < 49; ++i) red += a.rgb[3 * i] == 255 && a.rgb[3 * i + 1] == 0 && a.rgb[3 * i + 2] == 0;
  EXPECT_EQ(red, 8);
  const RgbImage b = render_overlay(img, map, mask);
  EXPECT_EQ(encode_png(b), encode_png(render_overlay(img, map, mask)));
  EXPECT_EQ(encode_png(b).substr(1, 3), "PNG");
  EXPECT_THROW(render_overlay(img, std::vector<double>(48, 0.0)), std::invalid_argument);
  EXPECT_THROW(render_overlay(img, map, RoiMask(6, 7)), std::invalid_argument);
}

TEST(Render, JetEndpoints) {
  const auto lo = jet(0.0), hi = jet(1.0), mid = jet(0.5);
  EXPECT_EQ(lo[0], 0.0);
  EXPECT_GT(lo[2], 0.0);
  EXPECT_GT(hi[0], 0.0);
  EXPECT_EQ(hi[2], 0.0);
  EXPECT_EQ(mid[1], 1.0);
}

TEST(Render, HeatmapExportWritesPgmAndJson) {
  TempDir dir;
  SaliencyMap sm;
  sm.width = sm.height = 8;
  sm.values.assign(64, 0.0);
  sm.values[9] = 1.0;
  sm.source_class = 2;
  OverlapScores sc{0.5, 1.0 / 3.0, false};
  export_heatmap(dir / "h.pgm", sm, sc);
  const ImageGray back = read_pgm(dir / "h.pgm");
  EXPECT_EQ(back.pixels[9], 1.0);
  EXPECT_EQ(back.pixels[0], 0.0);
  const Json j = read_json_file(dir / "h.json");
  EXPECT_EQ(j.at("class"), "pituitary");
  EXPECT_DOUBLE_EQ(j.at("dice").get<double>(), 0.5);
  EXPECT_DOUBLE_EQ(j.at("threshold").get<double>(), 0.2);
}
