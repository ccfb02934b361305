#include "neuroscope/rules/report.hpp"

#include <algorithm>
#include <stdexcept>

#include "neuroscope/data/image.hpp"

namespace neuroscope {

namespace {
const char* kDash = "–";

std::size_t display_width(const std::string& s) {
  std::size_t w = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++w;
  return w;
}
}  // namespace

std::string display_class(int label) {
  std::string n = label_name(label);
  n[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(n[0])));
  return n;
}

Json RuleReportRow::to_json() const {
  Json j{{"case_id", case_id},
         {"model_prediction", display_class(prediction)},
         {"rule_triggered", rule.has_value()},
         {"rule_description", rule ? Json(rule->description) : Json(nullptr)}};
  j["tumor_type"] = tumor_type ? Json(display_class(*tumor_type)) : Json(nullptr);
  j["rule_id"] = rule ? Json(to_string(rule->rule_id)) : Json(nullptr);
  j["prediction_matches_rule"] = rule && rule->matches_prediction ? Json(*rule->matches_prediction) : Json(nullptr);
  return j;
}

RuleReportRow RuleReportRow::from_json(const Json& j) {
  RuleReportRow r;
  r.case_id = j.at("case_id").get<std::string>();
  auto parse_class = [](const std::string& s) {
    std::string lower = s;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    return label_from_name(lower);
  };
  r.prediction = parse_class(j.at("model_prediction").get<std::string>());
  if (!j.at("tumor_type").is_null()) r.tumor_type = parse_class(j.at("tumor_type").get<std::string>());
  if (j.at("rule_triggered").get<bool>()) {
    RuleResult rr;
    rr.rule_id = rule_id_from_string(j.at("rule_id").get<std::string>());
    rr.triggered = true;
    rr.description = j.at("rule_description").get<std::string>();
    if (!j.at("prediction_matches_rule").is_null()) rr.matches_prediction = j.at("prediction_matches_rule").get<bool>();
    r.rule = rr;
  }
  return r;
}

std::string format_rule_table(const std::vector<RuleReportRow>& rows) {
  std::vector<std::vector<std::string>> cells{
      {"Case ID", "Tumor Type", "Model Prediction", "Rule Triggered", "Rule Description", "Prediction Matches Rule"}};
  for (const auto& r : rows) {
    std::string matches = "N/A";
    if (r.rule && r.rule->matches_prediction) matches = *r.rule->matches_prediction ? "Yes" : "No";
    cells.push_back({r.case_id, r.tumor_type ? display_class(*r.tumor_type) : kDash, display_class(r.prediction),
                     r.rule ? "Yes" : "No", r.rule ? r.rule->description : kDash, matches});
  }
  std::vector<std::size_t> width(cells[0].size(), 0);
  for (const auto& row : cells)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], display_width(row[c]));
  std::string out;
  for (const auto& row : cells) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      line += row[c];
      if (c + 1 < row.size()) line += std::string(width[c] - display_width(row[c]) + 2, ' ');
    }
    out += line + "\n";
  }
  return out;
}

Json rule_table_json(const std::vector<RuleReportRow>& rows) {
  Json a = Json::array();
  for (const auto& r : rows) a.push_back(r.to_json());
  return a;
}

}  // namespace neuroscope
