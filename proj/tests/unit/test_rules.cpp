#include <gtest/gtest.h>

#include <cmath>

#include "neuroscope/common/rng.hpp"
#include "neuroscope/data/mask_ops.hpp"
#include "neuroscope/data/phantom.hpp"
#include "neuroscope/rules/features.hpp"
#include "neuroscope/rules/report.hpp"
#include "neuroscope/rules/rules.hpp"

using namespace neuroscope;

namespace {

RoiMask disk(int size, double cx, double cy, double r) {
  RoiMask m(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      if (std::hypot(x + 0.5 - cx, y + 0.5 - cy) <= r) m.at(x, y) = 1;
  return m;
}

RegionFeatures features(double ring, double area, double offset) {
  RegionFeatures f;
  f.ring_score = ring;
  f.area_cm2 = area;
  f.midline_offset_frac = offset;
  return f;
}

int fired(const std::vector<RuleResult>& r) {
  int n = 0;
  for (const auto& x : r) n += x.triggered;
  return n;
}

}  // namespace

TEST(RegionFeaturesTest, HundredPixelsAtOneMillimetreIsOneSquareCentimetre) {
  ImageGray img(32, 32, 1.0, 0.5);
  RoiMask m(32, 32);
  for (int y = 5; y < 15; ++y)
    for (int x = 5; x < 15; ++x) m.at(x, y) = 1;
  const RegionFeatures f = region_features(img, m);
  EXPECT_DOUBLE_EQ(f.area_cm2, 1.0);
  EXPECT_EQ(f.pixel_count, 100u);
  EXPECT_DOUBLE_EQ(f.centroid_x, 10.0);
  EXPECT_DOUBLE_EQ(f.centroid_y, 10.0);
  EXPECT_DOUBLE_EQ(f.midline_offset_frac, 6.0 / 32.0);
  EXPECT_DOUBLE_EQ(f.convexity, 1.0);
  img.spacing_mm = 0.5;
  EXPECT_DOUBLE_EQ(region_features(img, m).area_cm2, 0.25);
}

TEST(RegionFeaturesTest, UniformDiskHasUnitRingScore) {
  const RoiMask m = disk(48, 20, 24, 9);
  const RegionFeatures f = region_features(ImageGray(48, 48, 1.0, 0.63), m);
  EXPECT_NEAR(f.ring_score, 1.0, 1e-9);
  EXPECT_FALSE(f.touches_boundary);
  EXPECT_GT(f.convexity, 0.9);
  EXPECT_LE(f.convexity, 1.0);
}

TEST(RegionFeaturesTest, BrightAnnulusAroundDarkCoreScoresFive) {
  const RoiMask m = disk(48, 24, 24, 10);
  const RoiMask core = erode8(m, 2);
  ImageGray img(48, 48, 1.0, 0.5);
  for (std::size_t i = 0; i < m.bits.size(); ++i)
    if (m.bits[i]) img.pixels[i] = core.bits[i] ? 0.2 : 1.0;
  EXPECT_NEAR(region_features(img, m).ring_score, 5.0, 1e-12);
}

TEST(RegionFeaturesTest, ThinMaskWithoutInteriorHasZeroRingScore) {
  RoiMask m(16, 16);
  for (int x = 2; x < 12; ++x) m.at(x, 5) = 1;
  EXPECT_EQ(region_features(ImageGray(16, 16, 1.0, 0.5), m).ring_score, 0.0);
}

TEST(RegionFeaturesTest, LargestComponentAndConvexity) {
  RoiMask m(20, 20);
  // 12-pixel L shape plus a stray pixel
  for (int y = 2; y < 6; ++y)
    for (int x = 2; x < 4; ++x) m.at(x, y) = 1;
  for (int y = 4; y < 6; ++y)
    for (int x = 4; x < 6; ++x) m.at(x, y) = 1;
  m.at(15, 15) = 1;
  const RegionFeatures f = region_features(ImageGray(20, 20, 1.0, 0.5), m);
  EXPECT_EQ(f.components, 2u);
  EXPECT_EQ(f.pixel_count, 12u);
  // hull of the corners: 4x4 box minus the (4,2)-(6,2)-(6,4) triangle
  EXPECT_DOUBLE_EQ(convex_hull_area(largest_component(m)), 14.0);
  EXPECT_DOUBLE_EQ(f.convexity, 12.0 / 14.0);
}

TEST(RegionFeaturesTest, TouchesBoundaryNextToBackground) {
  ImageGray img(20, 20, 1.0, 0.5);
  RoiMask m(20, 20);
  for (int y = 8; y < 12; ++y)
    for (int x = 8; x < 12; ++x) m.at(x, y) = 1;
  EXPECT_FALSE(region_features(img, m).touches_boundary);
  img.at(12, 10) = 0.0;
  EXPECT_TRUE(region_features(img, m).touches_boundary);
  RoiMask edge(20, 20);
  edge.at(0, 0) = edge.at(1, 0) = 1;
  EXPECT_TRUE(region_features(ImageGray(20, 20, 1.0, 0.5), edge).touches_boundary);
}

TEST(RegionFeaturesTest, ErrorsAndJsonRoundTrip) {
  EXPECT_THROW(region_features(ImageGray(16, 16, 1.0), RoiMask(16, 16)), std::invalid_argument);
  RoiMask m(16, 16);
  m.at(3, 3) = 1;
  EXPECT_THROW(region_features(ImageGray(16, 17, 1.0), m), std::invalid_argument);
  const RegionFeatures f = region_features(ImageGray(16, 16, 1.0, 0.4), disk(16, 8, 8, 4));
  EXPECT_EQ(RegionFeatures::from_json(f.to_json()).to_json(), f.to_json());
}

TEST(RegionFeaturesTest, PhantomClassesSatisfyTheirRules) {
  const auto ds = generate_phantoms(20, 64, kDefaultSpacingMm, 5);
  for (const auto& s : ds.samples) {
    const auto rule = triggered_rule(evaluate_rules(region_features(s.image, *s.mask), s.label));
    if (s.label == 2) {
      ASSERT_TRUE(rule) << s.id;
      EXPECT_EQ(rule->rule_id, RuleId::R3_pituitary);
    }
    if (rule) {
      EXPECT_EQ(implied_class(rule->rule_id), s.label) << s.id;
    }
  }
}

TEST(Rules, RingAndFivePointSixTriggersRuleOne) {
  const auto r = evaluate_rules(features(2.0, 5.6, 0.3), 0);
  ASSERT_TRUE(r[0].triggered);
  EXPECT_EQ(fired(r), 1);
  EXPECT_EQ(r[0].description, "Rule 1 activated: ring-enhancing region + area = 5.6 cm² → glioblastoma probable");
  EXPECT_TRUE(*r[0].matches_prediction);
  EXPECT_FALSE(*evaluate_rules(features(2.0, 5.6, 0.3), 1)[0].matches_prediction);
}

TEST(Rules, MidlineSmallLesionTriggersRuleThree) {
  const auto r = evaluate_rules(features(1.0, 0.8, 0.02), 2);
  ASSERT_TRUE(r[2].triggered);
  EXPECT_EQ(fired(r), 1);
  EXPECT_EQ(implied_class(r[2].rule_id), 2);
  EXPECT_TRUE(*r[2].matches_prediction);
  EXPECT_NE(r[2].description.find("area = 0.8 cm²"), std::string::npos);
}

TEST(Rules, HemisphericMidSizedLesionTriggersRuleTwo) {
  const auto r = evaluate_rules(features(1.0, 3.0, 0.2), 0);
  ASSERT_TRUE(r[1].triggered);
  EXPECT_EQ(fired(r), 1);
  EXPECT_EQ(r[1].description.rfind("Rule 2 activated: ", 0), 0u);
}

TEST(Rules, MeningiomaPatternTriggersNothing) {
  const auto r = evaluate_rules(features(1.0, 1.5, 0.2), 1);
  EXPECT_EQ(fired(r), 0);
  for (const auto& x : r) {
    EXPECT_TRUE(x.description.empty());
    EXPECT_FALSE(x.matches_prediction);
  }
  EXPECT_FALSE(triggered_rule(r));
}

TEST(Rules, BoundaryValues) {
  EXPECT_FALSE(evaluate_rules(features(2.0, 4.0, 0.3), 0)[0].triggered);  // R1 needs > 4
  EXPECT_TRUE(evaluate_rules(features(1.29, 4.0, 0.3), 0)[1].triggered);  // R2 interval is closed
  EXPECT_TRUE(evaluate_rules(features(1.29, 2.0, 0.3), 0)[1].triggered);
  EXPECT_FALSE(evaluate_rules(features(1.3, 3.0, 0.3), 0)[1].triggered);  // ring threshold inclusive
  EXPECT_TRUE(evaluate_rules(features(1.0, 0.99, 0.10), 2)[2].triggered);
  EXPECT_FALSE(evaluate_rules(features(1.0, 1.0, 0.05), 2)[2].triggered);
  EXPECT_FALSE(evaluate_rules(features(1.0, 3.0, 0.10), 0)[1].triggered);  // midline excludes R2
}

TEST(Rules, MutuallyExclusiveAndPure) {
  Rng rng(9);
  for (int t = 0; t < 20000; ++t) {
    const RegionFeatures f = features(rng.uniform(0, 3), rng.uniform(0, 8), rng.uniform(0, 0.5));
    const auto a = evaluate_rules(f, static_cast<int>(rng.below(3)));
    EXPECT_LE(fired(a), 1);
    EXPECT_NO_THROW(triggered_rule(a));
    const auto b = evaluate_rules(f, 0);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(a[i].triggered, b[i].triggered);
  }
  std::vector<RuleResult> two(2);
  two[0].triggered = two[1].triggered = true;
  EXPECT_THROW(triggered_rule(two), std::logic_error);
}

TEST(Rules, ConfigAndIdsRoundTrip) {
  RuleConfig c;
  c.ring_threshold = 1.5;
  EXPECT_DOUBLE_EQ(RuleConfig::from_json(c.to_json()).ring_threshold, 1.5);
  for (RuleId id : {RuleId::R1_glioblastoma, RuleId::R2_glioma, RuleId::R3_pituitary})
    EXPECT_EQ(rule_id_from_string(to_string(id)), id);
  EXPECT_THROW(rule_id_from_string("R4"), std::invalid_argument);
  const RuleResult r = evaluate_rules(features(2.0, 5.6, 0.3), 0)[0];
  EXPECT_EQ(RuleResult::from_json(r.to_json()).to_json(), r.to_json());
}

TEST(RuleReport, TableContainsHeaderAndDescriptionsUnchanged) {
  std::vector<RuleReportRow> rows;
  RuleReportRow a;
  a.case_id = "Case_01";
  a.tumor_type = 0;
  a.prediction = 0;
  a.rule = evaluate_rules(features(2.0, 5.6, 0.3), 0)[0];
  RuleReportRow b;
  b.case_id = "Case_02";
  b.tumor_type = 1;
  b.prediction = 1;
  rows = {a, b};
  const std::string t = format_rule_table(rows);
  EXPECT_NE(t.find("Case ID"), std::string::npos);
  EXPECT_NE(t.find("Prediction Matches Rule"), std::string::npos);
  EXPECT_NE(t.find(a.rule->description), std::string::npos);
  EXPECT_NE(t.find("Meningioma"), std::string::npos);
  EXPECT_NE(t.find("N/A"), std::string::npos);
  EXPECT_NE(t.find("Yes"), std::string::npos);

  const Json j = rule_table_json(rows);
  ASSERT_EQ(j.size(), 2u);
  for (std::size_t i = 0; i < rows.size(); ++i)
    EXPECT_EQ(RuleReportRow::from_json(j[i]).to_json(), rows[i].to_json());
  EXPECT_EQ(RuleReportRow::from_json(j[0]).rule->description, a.rule->description);
  EXPECT_EQ(display_class(2), "Pituitary");
}

TEST(RuleReport, ColumnsAlignOnDisplayWidth) {
  RuleReportRow a;
  a.case_id = "x";
  a.prediction = 2;
  a.rule = evaluate_rules(features(1.0, 0.8, 0.02), 2)[2];
  RuleReportRow b;
  b.case_id = "longer_case_id";
  b.prediction = 0;
  const std::string t = format_rule_table({a, b});
  // split into lines of code points
  std::vector<std::vector<std::string>> lines(1);
  for (std::size_t i = 0; i < t.size();) {
    if (t[i] == '\n') {
      lines.emplace_back();
      ++i;
      continue;
    }
    std::size_t len = 1;
    while (i + len < t.size() && (static_cast<unsigned char>(t[i + len]) & 0xC0) == 0x80) ++len;
    lines.back().push_back(t.substr(i, len));
    i += len;
  }
  lines.pop_back();
  ASSERT_EQ(lines.size(), 3u);
  // column starts taken from the header, found after each two-space gap
  std::vector<std::size_t> starts{0};
  const auto& head = lines[0];
  for (std::size_t c = 2; c < head.size(); ++c)
    if (head[c - 2] == " " && head[c - 1] == " " && head[c] != " ") starts.push_back(c);
  ASSERT_EQ(starts.size(), 6u);
  for (const auto& line : lines)
    for (std::size_t c : starts) {
      ASSERT_LT(c, line.size());
      EXPECT_NE(line[c], " ");
      if (c > 0) {
        EXPECT_EQ(line[c - 1], " ");
      }
    }
}
