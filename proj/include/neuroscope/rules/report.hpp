#pragma once

#include <optional>
#include <string>
#include <vector>

#include "neuroscope/common/json_util.hpp"
#include "neuroscope/rules/rules.hpp"

namespace neuroscope {

// One row of the rule-overlay summary table.
struct RuleReportRow {
  std::string case_id;
  std::optional<int> tumor_type;  // ground truth when known
  int prediction = 0;
  std::optional<RuleResult> rule;  // the triggered rule, if any

  Json to_json() const;
  static RuleReportRow from_json(const Json& j);
};

// "Glioma" | "Meningioma" | "Pituitary"
std::string display_class(int label);

// Case ID | Tumor Type | Model Prediction | Rule Triggered | Rule Description |
// Prediction Matches Rule, with "–" and "N/A" for rows without a rule.
std::string format_rule_table(const std::vector<RuleReportRow>& rows);
Json rule_table_json(const std::vector<RuleReportRow>& rows);

}  // namespace neuroscope
