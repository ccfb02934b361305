#include "neuroscope/rules/rules.hpp"

#include <stdexcept>

#include "neuroscope/common/json_util.hpp"

namespace neuroscope {

std::string to_string(RuleId id) {
  switch (id) {
    case RuleId::R1_glioblastoma:
      return "R1_glioblastoma";
    case RuleId::R2_glioma:
      return "R2_glioma";
    case RuleId::R3_pituitary:
      return "R3_pituitary";
  }
  return "?";
}

RuleId rule_id_from_string(const std::string& s) {
  if (s == "R1_glioblastoma") return RuleId::R1_glioblastoma;
  if (s == "R2_glioma") return RuleId::R2_glioma;
  if (s == "R3_pituitary") return RuleId::R3_pituitary;
  throw std::invalid_argument("unknown rule id '" + s + "'");
}

int implied_class(RuleId id) { return id == RuleId::R3_pituitary ? 2 : 0; }

Json RuleConfig::to_json() const {
  return Json{{"ring_threshold", ring_threshold}, {"midline_tolerance", midline_tolerance},
              {"r1_min_area", r1_min_area},       {"r2_min_area", r2_min_area},
              {"r2_max_area", r2_max_area},       {"r3_max_area", r3_max_area}};
}

RuleConfig RuleConfig::from_json(const Json& j) {
  RuleConfig c;
  c.ring_threshold = j.value("ring_threshold", c.ring_threshold);
  c.midline_tolerance = j.value("midline_tolerance", c.midline_tolerance);
  c.r1_min_area = j.value("r1_min_area", c.r1_min_area);
  c.r2_min_area = j.value("r2_min_area", c.r2_min_area);
  c.r2_max_area = j.value("r2_max_area", c.r2_max_area);
  c.r3_max_area = j.value("r3_max_area", c.r3_max_area);
  return c;
}

Json RuleResult::to_json() const {
  Json j{{"rule_id", to_string(rule_id)}, {"triggered", triggered}, {"description", description}};
  j["matches_prediction"] = matches_prediction ? Json(*matches_prediction) : Json(nullptr);
  return j;
}

RuleResult RuleResult::from_json(const Json& j) {
  RuleResult r;
  r.rule_id = rule_id_from_string(j.at("rule_id").get<std::string>());
  r.triggered = j.at("triggered").get<bool>();
  r.description = j.at("description").get<std::string>();
  if (j.contains("matches_prediction") && !j.at("matches_prediction").is_null())
    r.matches_prediction = j.at("matches_prediction").get<bool>();
  return r;
}

std::string rule_description(RuleId id, double area_cm2) {
  const std::string area = " + area = " + format_fixed(area_cm2, 1) + " cm² → ";
  switch (id) {
    case RuleId::R1_glioblastoma:
      return "Rule 1 activated: ring-enhancing region" + area + "glioblastoma probable";
    case RuleId::R2_glioma:
      return "Rule 2 activated: non-ring-enhancing hemispheric lesion" + area + "glioma probable";
    case RuleId::R3_pituitary:
      return "Rule 3 activated: midline sellar region" + area + "pituitary adenoma probable";
  }
  return {};
}

std::vector<RuleResult> evaluate_rules(const RegionFeatures& f, int prediction, const RuleConfig& cfg) {
  const bool ring = f.ring_score >= cfg.ring_threshold;
  const bool midline = f.midline_offset_frac <= cfg.midline_tolerance;
  const double a = f.area_cm2;
  const bool fire[3] = {
      ring && a > cfg.r1_min_area,
      !ring && a >= cfg.r2_min_area && a <= cfg.r2_max_area && !midline,
      midline && a < cfg.r3_max_area,
  };
  std::vector<RuleResult> out;
  for (int i = 0; i < 3; ++i) {
    RuleResult r;
    r.rule_id = static_cast<RuleId>(i);
    r.triggered = fire[i];
    if (r.triggered) {
      r.description = rule_description(r.rule_id, a);
      r.matches_prediction = implied_class(r.rule_id) == prediction;
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::optional<RuleResult> triggered_rule(const std::vector<RuleResult>& results) {
  std::optional<RuleResult> hit;
  for (const auto& r : results) {
    if (!r.triggered) continue;
    if (hit) throw std::logic_error("more than one rule fired for a single region");
    hit = r;
  }
  return hit;
}

}  // namespace neuroscope
