#pragma once

#include <optional>
#include <string>
#include <vector>

#include "neuroscope/common/json_util.hpp"
#include "neuroscope/rules/features.hpp"

namespace neuroscope {

enum class RuleId { R1_glioblastoma, R2_glioma, R3_pituitary };

std::string to_string(RuleId id);
RuleId rule_id_from_string(const std::string& s);
// Class index a rule points to; glioblastoma maps to glioma.
int implied_class(RuleId id);

struct RuleConfig {
  double ring_threshold = 1.3;
  double midline_tolerance = 0.10;  // fraction of image width
  double r1_min_area = 4.0;         // cm^2, exclusive
  double r2_min_area = 2.0;         // cm^2, inclusive
  double r2_max_area = 4.0;         // cm^2, inclusive
  double r3_max_area = 1.0;         // cm^2, exclusive

  Json to_json() const;
  static RuleConfig from_json(const Json& j);
};

struct RuleResult {
  RuleId rule_id = RuleId::R1_glioblastoma;
  bool triggered = false;
  std::string description;                // empty unless triggered
  std::optional<bool> matches_prediction;  // set only when triggered

  Json to_json() const;
  static RuleResult from_json(const Json& j);
};

// All three rules in order R1, R2, R3. Pure.
std::vector<RuleResult> evaluate_rules(const RegionFeatures& f, int prediction, const RuleConfig& cfg = {});

// "Rule <n> activated: <summary> + area = <x.y> cm² → <diagnosis> probable"
std::string rule_description(RuleId id, double area_cm2);

// The single triggered rule, if any. Throws std::logic_error when more than
// one fired (the rules are meant to be mutually exclusive).
std::optional<RuleResult> triggered_rule(const std::vector<RuleResult>& results);

}  // namespace neuroscope
