#pragma once

#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "neuroscope/tensor/tensor.hpp"

namespace neuroscope {

// Records differentiable operations in execution order. Each node keeps its
// inputs and output alive so saved forward values stay valid until clear().
// A tape is not thread-safe; use one tape per thread.
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  struct Node {
    std::string op;
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardFn backward;  // reads output.grad(), accumulates into inputs
  };

  // Appends a node and marks `output` as tracked.
  void record(std::string op, std::vector<Tensor> inputs, Tensor output, BackwardFn fn);

  // Reverse-mode pass from a scalar. Intermediate gradients are reset first;
  // leaf gradients accumulate across calls.
  void backward(const Tensor& loss);

  // d(scalar)/d(activation) without touching leaf gradients. The activation
  // must have been produced or consumed by a recorded op.
  Tensor grad_wrt_activation(const Tensor& scalar, const Tensor& activation);

  bool produced(const Tensor& t) const;
  bool on_tape(const Tensor& t) const;

  std::span<const Node> nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  void clear();

 private:
  void propagate(const Tensor& loss);

  std::vector<Node> nodes_;
  std::unordered_map<const void*, std::size_t> producer_;
};

}  // namespace neuroscope
