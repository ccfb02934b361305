#pragma once

#include <span>

#include "neuroscope/networks/model.hpp"

namespace neuroscope {

inline constexpr double kLogEpsilon = 1e-12;

// [N] integer labels -> [N,3] one-hot. Throws on labels outside {0,1,2}.
Tensor one_hot(std::span<const int> labels, int num_classes = kNumClasses);

// Mean over the batch of -w[c] * log(p[c] + 1e-12) for the labelled class c.
// Rejects label rows that are not one-hot.
Tensor weighted_cross_entropy(Tape* tape, const Tensor& probs, const Tensor& one_hot_labels,
                              const ClassWeights& weights);

// Balanced scheme: w_c = N / (K * N_c). Throws when any count is zero.
ClassWeights compute_class_weights(std::span<const std::size_t> counts);

}  // namespace neuroscope
