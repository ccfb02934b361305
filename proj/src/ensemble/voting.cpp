#include "neuroscope/ensemble/voting.hpp"

#include <algorithm>
#include <stdexcept>

namespace neuroscope {

EnsemblePrediction soft_vote(std::span<const ProbVector> probs) {
  if (probs.empty()) throw std::invalid_argument("soft_vote: no members");
  EnsemblePrediction e;
  for (const auto& p : probs) e.member_probs.push_back(ProbVector::checked(p.p));
  // sum each class in sorted order so member order cannot change the bits
  std::vector<double> col(probs.size());
  for (int c = 0; c < kNumClasses; ++c) {
    for (std::size_t m = 0; m < probs.size(); ++m) col[m] = probs[m].p[c];
    std::sort(col.begin(), col.end());
    double s = 0.0;
    for (double v : col) s += v;
    e.averaged.p[c] = s / static_cast<double>(probs.size());
  }
  e.predicted_class = e.averaged.argmax();
  for (int c = 0; c < kNumClasses; ++c) {
    if (c != e.predicted_class &&
        e.averaged.p[e.predicted_class] - e.averaged.p[c] <= kTieTolerance) {
      e.tie_broken = true;
    }
  }
  return e;
}

int hard_vote(std::span<const int> labels, std::span<const ProbVector> fallback_probs) {
  if (labels.empty()) throw std::invalid_argument("hard_vote: no members");
  if (labels.size() != fallback_probs.size())
    throw std::invalid_argument("hard_vote: labels and fallback probabilities differ in length");
  int counts[kNumClasses] = {0, 0, 0};
  for (int l : labels) {
    if (l < 0 || l >= kNumClasses) throw std::invalid_argument("hard_vote: label outside {0,1,2}");
    ++counts[l];
  }
  for (int c = 0; c < kNumClasses; ++c)
    if (2 * counts[c] > static_cast<int>(labels.size())) return c;
  return soft_vote(fallback_probs).predicted_class;
}

Json prediction_row(const std::string& id, const EnsemblePrediction& e) {
  Json members = Json::array();
  for (const auto& p : e.member_probs) members.push_back(p.p);
  return Json{{"id", id}, {"member_probs", members}, {"averaged", e.averaged.p}, {"predicted_class", e.predicted_class}};
}

}  // namespace neuroscope
