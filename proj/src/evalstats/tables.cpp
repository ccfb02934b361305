#include "neuroscope/evalstats/tables.hpp"

#include <algorithm>
#include <cstdio>

namespace neuroscope {

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

// Column widths come from the widest cell; UTF-8 cells are measured in code points.
std::size_t display_width(const std::string& s) {
  std::size_t w = 0;
  for (unsigned char c : s)
    if ((c & 0xC0) != 0x80) ++w;
  return w;
}

std::string render(const std::vector<std::vector<std::string>>& cells) {
  std::vector<std::size_t> width;
  for (const auto& row : cells) {
    if (width.size() < row.size()) width.resize(row.size(), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], display_width(row[c]));
  }
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

}  // namespace

std::string format_metrics_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::vector<std::vector<std::string>> cells{{"Model", "Accuracy", "Precision", "Recall", "F1-Score"}};
  for (const auto& [name, m] : rows) {
    cells.push_back({name, fixed(m.accuracy, 3), fixed(m.macro_precision, 3), fixed(m.macro_recall, 3),
                     fixed(m.macro_f1, 3)});
  }
  return render(cells);
}

std::string format_stats_table(const std::vector<ComparisonColumn>& columns) {
  std::vector<std::vector<std::string>> cells(4);
  cells[0].push_back("Test");
  cells[1].push_back("Paired t-test (t, p-value)");
  cells[2].push_back("Cohen's d");
  cells[3].push_back("Friedman test (χ², p-value)");
  for (const auto& col : columns) {
    const StatReport& s = col.stats;
    cells[0].push_back(col.name);
    cells[1].push_back(s.degenerate ? "undefined (zero variance)" : "(" + fixed(s.t.t, 2) + ", " + fixed(s.t.p, 4) + ")");
    cells[2].push_back(s.degenerate ? "undefined" : fixed(s.cohens_d, 2));
    cells[3].push_back("(" + fixed(s.friedman.chi2, 2) + ", " + fixed(s.friedman.p, 4) + ")");
  }
  return render(cells);
}

}  // namespace neuroscope
