#include "neuroscope/networks/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace neuroscope {

Tensor one_hot(std::span<const int> labels, int num_classes) {
  Tensor out(Shape{labels.size(), static_cast<std::size_t>(num_classes)});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= num_classes) {
      throw std::invalid_argument("label " + std::to_string(labels[i]) + " outside [0," +
                                  std::to_string(num_classes) + ")");
    }
    out.data()[i * num_classes + labels[i]] = 1.0;
  }
  return out;
}

Tensor weighted_cross_entropy(Tape* tape, const Tensor& probs, const Tensor& one_hot_labels,
                              const ClassWeights& weights) {
  if (probs.rank() != 2 || probs.dim(1) != kNumClasses || probs.shape() != one_hot_labels.shape()) {
    throw ShapeError("weighted_cross_entropy: probs " + shape_str(probs.shape()) + " and labels " +
                     shape_str(one_hot_labels.shape()) + " must both be [N,3]");
  }
  const std::size_t n = probs.dim(0);
  if (n == 0) throw ShapeError("weighted_cross_entropy: empty batch");
  std::vector<int> cls(n);
  for (std::size_t i = 0; i < n; ++i) {
    int hot = -1, ones = 0;
    for (int c = 0; c < kNumClasses; ++c) {
      const double y = one_hot_labels.data()[i * kNumClasses + c];
      if (y == 1.0) {
        hot = c;
        ++ones;
      } else if (y != 0.0) {
        ones = -1;
        break;
      }
    }
    if (ones != 1) {
      throw std::invalid_argument("weighted_cross_entropy: label row " + std::to_string(i) +
                                  " is not one-hot");
    }
    cls[i] = hot;
  }

  const double inv_n = 1.0 / static_cast<double>(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total -= weights.w[cls[i]] * std::log(probs.data()[i * kNumClasses + cls[i]] + kLogEpsilon);
  }
  Tensor out = Tensor::scalar(total * inv_n);
  if (tape) {
    tape->record("weighted_cross_entropy", {probs}, out,
                 [probs, out, cls, weights, inv_n]() mutable {
                   if (!probs.wants_grad()) return;
                   const double g = out.grad()[0];
                   auto gp = probs.grad_storage();
                   for (std::size_t i = 0; i < cls.size(); ++i) {
                     const std::size_t idx = i * kNumClasses + cls[i];
                     gp[idx] -= g * inv_n * weights.w[cls[i]] / (probs.data()[idx] + kLogEpsilon);
                   }
                 });
  }
  return out;
}

ClassWeights compute_class_weights(std::span<const std::size_t> counts) {
  if (counts.size() != kNumClasses) {
    throw std::invalid_argument("compute_class_weights expects 3 class counts");
  }
  std::size_t total = 0;
  for (std::size_t c : counts) {
    if (c == 0) throw std::invalid_argument("compute_class_weights: a class has zero samples");
    total += c;
  }
  ClassWeights w;
  for (int c = 0; c < kNumClasses; ++c) {
    w.w[c] = static_cast<double>(total) / (kNumClasses * static_cast<double>(counts[c]));
  }
  return w;
}

}  // namespace neuroscope
