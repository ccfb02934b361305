#include "neuroscope/evalstats/metrics.hpp"

#include <stdexcept>

namespace neuroscope {

ConfusionMatrix ConfusionMatrix::from_labels(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) throw std::invalid_argument("confusion matrix: label lists differ in length");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] < 0 || truth[i] >= kMetricClasses || predicted[i] < 0 || predicted[i] >= kMetricClasses)
      throw std::invalid_argument("confusion matrix: label outside {0,1,2}");
    ++cm.counts[truth[i]][predicted[i]];
  }
  return cm;
}

std::int64_t ConfusionMatrix::total() const {
  std::int64_t s = 0;
  for (const auto& row : counts)
    for (auto v : row) s += v;
  return s;
}

std::int64_t ConfusionMatrix::trace() const {
  std::int64_t s = 0;
  for (int c = 0; c < kMetricClasses; ++c) s += counts[c][c];
  return s;
}

Json ConfusionMatrix::to_json() const { return Json(counts); }

namespace {
double ratio(double num, double den, bool& undefined) {
  if (den == 0.0) {
    undefined = true;
    return 0.0;
  }
  return num / den;
}
}  // namespace

MetricsReport metrics(const ConfusionMatrix& cm) {
  for (const auto& row : cm.counts)
    for (auto v : row)
      if (v < 0) throw std::invalid_argument("confusion matrix has negative counts");
  const std::int64_t n = cm.total();
  if (n == 0) throw std::invalid_argument("confusion matrix is empty");

  MetricsReport r;
  r.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(n);
  for (int c = 0; c < kMetricClasses; ++c) {
    ClassMetrics& m = r.per_class[c];
    m.tp = cm.counts[c][c];
    for (int k = 0; k < kMetricClasses; ++k) {
      if (k == c) continue;
      m.fn += cm.counts[c][k];
      m.fp += cm.counts[k][c];
    }
    m.tn = n - m.tp - m.fn - m.fp;
    const double tp = double(m.tp), fp = double(m.fp), fn = double(m.fn);
    m.precision = ratio(tp, tp + fp, m.undefined_precision);
    m.recall = ratio(tp, tp + fn, m.undefined_recall);
    // Harmonic mean of P and R in count form, so F1 and DCI agree bit for bit.
    bool unused = false;
    m.dci = ratio(2 * tp, 2 * tp + fp + fn, unused);
    m.undefined_f1 = m.precision + m.recall == 0.0;
    m.f1 = m.undefined_f1 ? 0.0 : m.dci;
    m.accuracy = double(m.tp + m.tn) / double(n);
    r.macro_precision += m.precision / kMetricClasses;
    r.macro_recall += m.recall / kMetricClasses;
    r.macro_f1 += m.f1 / kMetricClasses;
    r.macro_dci += m.dci / kMetricClasses;
  }
  return r;
}

Json MetricsReport::to_json() const {
  Json pc = Json::array();
  for (const auto& m : per_class) {
    pc.push_back(Json{{"tp", m.tp},
                      {"fp", m.fp},
                      {"fn", m.fn},
                      {"tn", m.tn},
                      {"precision", m.precision},
                      {"recall", m.recall},
                      {"f1", m.f1},
                      {"dci", m.dci},
                      {"accuracy_ovr", m.accuracy},
                      {"undefined", Json{{"precision", m.undefined_precision},
                                         {"recall", m.undefined_recall},
                                         {"f1", m.undefined_f1}}}});
  }
  return Json{{"accuracy", accuracy},
              {"macro", Json{{"precision", macro_precision}, {"recall", macro_recall}, {"f1", macro_f1}, {"dci", macro_dci}}},
              {"per_class", pc}};
}

}  // namespace neuroscope
