#include "neuroscope/training/adam.hpp"

#include <cmath>

namespace neuroscope {

void adam_step(std::span<double> param, std::span<const double> grad, AdamMoments& state, double lr,
               const AdamConfig& cfg, const std::string& name) {
  if (param.size() != grad.size()) throw std::invalid_argument("adam_step: gradient size mismatch for " + name);
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      throw NumericalError("non-finite gradient in " + name + " at element " + std::to_string(i));
    }
  }
  if (state.m.size() != param.size()) {
    state.m.assign(param.size(), 0.0);
    state.v.assign(param.size(), 0.0);
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, double(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, double(state.t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double mh = state.m[i] / c1, vh = state.v[i] / c2;
    param[i] -= lr * mh / (std::sqrt(vh) + cfg.eps);
  }
}

Adam::Adam(std::vector<NamedTensor> params, AdamConfig cfg)
    : params_(std::move(params)), state_(params_.size()), cfg_(cfg) {}

void Adam::step(double lr, const std::vector<bool>& trainable) {
  if (trainable.size() != params_.size()) throw std::invalid_argument("Adam::step: trainable mask size mismatch");
  std::vector<double> zeros;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!trainable[i]) continue;
    Tensor& t = params_[i].tensor;
    std::span<const double> g;
    if (t.has_grad()) {
      g = t.grad();
    } else {
      zeros.assign(t.numel(), 0.0);
      g = zeros;
    }
    adam_step(t.data(), g, state_[i], lr, cfg_, params_[i].name);
  }
}

}  // namespace neuroscope
