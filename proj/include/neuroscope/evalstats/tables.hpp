#pragma once

#include <string>
#include <utility>
#include <vector>

#include "neuroscope/evalstats/metrics.hpp"
#include "neuroscope/evalstats/stats.hpp"

namespace neuroscope {

// Model | Accuracy | Precision | Recall | F1-Score, three decimals, macro
// averages.
std::string format_metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows);

struct ComparisonColumn {
  std::string name;  // the model the reference is compared against
  StatReport stats;
};

// Test | <column names...>; rows for the paired t-test, Cohen's d and the
// Friedman test.
std::string format_stats_table(const std::vector<ComparisonColumn>& columns);

}  // namespace neuroscope
