#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "neuroscope/tensor/checkpoint.hpp"

namespace neuroscope {

// Non-finite gradient or loss; the message names the offending tensor.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamMoments {
  std::vector<double> m, v;
  std::int64_t t = 0;
};

// One bias-corrected Adam update of `param` in place. Throws NumericalError
// (naming `name`) on a non-finite gradient before touching anything.
void adam_step(std::span<double> param, std::span<const double> grad, AdamMoments& state, double lr,
               const AdamConfig& cfg, const std::string& name = "param");

// Adam over a parameter list; entries marked untrainable are skipped, so
// their values and moments stay untouched.
class Adam {
 public:
  Adam(std::vector<NamedTensor> params, AdamConfig cfg = {});

  // Parameters with no accumulated gradient are treated as zero-gradient.
  void step(double lr, const std::vector<bool>& trainable);
  const AdamMoments& moments(std::size_t i) const { return state_.at(i); }

 private:
  std::vector<NamedTensor> params_;
  std::vector<AdamMoments> state_;
  AdamConfig cfg_;
};

}  // namespace neuroscope
