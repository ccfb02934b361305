#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "neuroscope/common/json_util.hpp"

namespace neuroscope {

inline constexpr int kMetricClasses = 3;

// rows = true class, cols = predicted class
struct ConfusionMatrix {
  std::array<std::array<std::int64_t, kMetricClasses>, kMetricClasses> counts{};

  static ConfusionMatrix from_labels(std::span<const int> truth, std::span<const int> predicted);
  std::int64_t total() const;
  std::int64_t trace() const;
  Json to_json() const;
};

struct ClassMetrics {
  std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 0, recall = 0, f1 = 0, dci = 0, accuracy = 0;
  // set when a denominator was zero and the metric was reported as 0
  bool undefined_precision = false, undefined_recall = false, undefined_f1 = false;
};

struct MetricsReport {
  double accuracy = 0;  // trace / total
  std::array<ClassMetrics, kMetricClasses> per_class{};
  double macro_precision = 0, macro_recall = 0, macro_f1 = 0, macro_dci = 0;

  Json to_json() const;
};

// One-vs-rest collapse per class; throws std::invalid_argument on negative
// counts or an empty matrix.
MetricsReport metrics(const ConfusionMatrix& cm);

}  // namespace neuroscope
