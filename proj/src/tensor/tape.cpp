#include "neuroscope/tensor/tape.hpp"

#include <algorithm>
#include <unordered_set>

namespace neuroscope {

void Tape::record(std::string op, std::vector<Tensor> inputs, Tensor output, BackwardFn fn) {
  output.set_tracked(true);
  producer_[output.id()] = nodes_.size();
  nodes_.push_back(Node{std::move(op), std::move(inputs), std::move(output), std::move(fn)});
}

bool Tape::produced(const Tensor& t) const { return producer_.contains(t.id()); }

bool Tape::on_tape(const Tensor& t) const {
  if (produced(t)) return true;
  for (const auto& node : nodes_) {
    for (const auto& in : node.inputs) {
      if (in.same_storage(t)) return true;
    }
  }
  return false;
}

void Tape::clear() {
  for (auto& node : nodes_) node.output.set_tracked(false);
  nodes_.clear();
  producer_.clear();
}

void Tape::propagate(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ShapeError("backward requires a scalar loss");
  }
  auto it = producer_.find(loss.id());
  if (it == producer_.end()) {
    throw std::invalid_argument("backward: loss was not produced on this tape");
  }
  const std::size_t last = it->second;

  // Intermediate buffers are re-allocated lazily by the first accumulation.
  for (auto& node : nodes_) node.output.clear_grad();
  nodes_[last].output.grad_storage()[0] = 1.0;

  std::vector<char> reached(nodes_.size(), 0);
  reached[last] = 1;
  for (std::size_t i = last + 1; i-- > 0;) {
    if (!reached[i]) continue;
    Node& node = nodes_[i];
    if (!node.output.has_grad()) continue;
    if (node.backward) node.backward();
    for (const auto& in : node.inputs) {
      auto p = producer_.find(in.id());
      if (p != producer_.end()) reached[p->second] = 1;
    }
  }
}

void Tape::backward(const Tensor& loss) { propagate(loss); }

Tensor Tape::grad_wrt_activation(const Tensor& scalar, const Tensor& activation) {
  if (!on_tape(activation)) {
    throw std::invalid_argument("grad_wrt_activation: activation is not on the tape");
  }
  // Snapshot leaf gradients so this query leaves optimizer state untouched.
  std::vector<Tensor> leaves;
  std::unordered_set<const void*> seen;
  for (const auto& node : nodes_) {
    for (const auto& in : node.inputs) {
      if (!produced(in) && in.wants_grad() && seen.insert(in.id()).second) leaves.push_back(in);
    }
  }
  std::vector<std::vector<double>> saved;
  saved.reserve(leaves.size());
  for (const auto& leaf : leaves) saved.emplace_back(leaf.grad().begin(), leaf.grad().end());

  Tensor act = activation;
  const bool was_tracked = act.tracked();
  const bool is_leaf = !produced(act);
  std::vector<double> act_saved;
  if (is_leaf) {
    act_saved.assign(act.grad().begin(), act.grad().end());
    act.set_tracked(true);
    act.zero_grad();
  }

  propagate(scalar);

  Tensor result(act.shape());
  if (act.has_grad()) std::copy(act.grad().begin(), act.grad().end(), result.data().begin());

  if (is_leaf) {
    act.set_tracked(was_tracked);
    act.clear_grad();
    if (!act_saved.empty()) {
      auto g = act.grad_storage();
      std::copy(act_saved.begin(), act_saved.end(), g.begin());
    }
  }
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    Tensor leaf = leaves[i];
    if (leaf.same_storage(act)) continue;
    leaf.clear_grad();
    if (!saved[i].empty()) {
      auto g = leaf.grad_storage();
      std::copy(saved[i].begin(), saved[i].end(), g.begin());
    }
  }
  return result;
}

}  // namespace neuroscope
