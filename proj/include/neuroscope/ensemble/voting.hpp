#pragma once

#include <span>
#include <vector>

#include "neuroscope/common/json_util.hpp"
#include "neuroscope/networks/model.hpp"

namespace neuroscope {

inline constexpr double kTieTolerance = 1e-12;

struct EnsemblePrediction {
  std::vector<ProbVector> member_probs;
  ProbVector averaged;
  int predicted_class = 0;
  // top two averaged probabilities within 1e-12; lowest index wins
  bool tie_broken = false;
};

// Equal-weight mean of member distributions. Throws std::invalid_argument on
// an empty list or a member that is not a distribution.
EnsemblePrediction soft_vote(std::span<const ProbVector> probs);

// Strict majority of labels, else soft_vote over fallback_probs.
int hard_vote(std::span<const int> labels, std::span<const ProbVector> fallback_probs);

// One predictions.jsonl row.
Json prediction_row(const std::string& id, const EnsemblePrediction& e);

}  // namespace neuroscope
