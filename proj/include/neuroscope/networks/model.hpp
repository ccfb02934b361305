#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "neuroscope/common/json_util.hpp"
#include "neuroscope/tensor/checkpoint.hpp"
#include "neuroscope/tensor/ops.hpp"

namespace neuroscope {

inline constexpr int kNumClasses = 3;

enum class Family { mobile_mini, dense_mini };

std::string to_string(Family family);
// Throws std::invalid_argument("unsupported model family ...").
Family family_from_string(std::string_view name);

struct ModelSpec {
  Family family = Family::mobile_mini;
  int input_size = 64;
  int channels = 1;
  int num_classes = kNumClasses;
  // mobile_mini: {stem, block1 out, block2 out, final 1x1}; dense_mini: {stem, transition}
  std::vector<int> widths;
  int expansion = 4;
  int dw_kernel = 3;  // mobile_mini depthwise kernel (odd)
  int growth_rate = 8;
  int layers_per_block = 4;
  double dropout_rate = 0.30;
  int frozen_prefix_len = 0;

  static ModelSpec defaults(Family family, int input_size = 64);
  // Throws std::invalid_argument describing the first violated invariant.
  void validate() const;
};

Json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const Json& j);

// Length-3 class distribution.
struct ProbVector {
  std::array<double, kNumClasses> p{};

  // Throws std::invalid_argument unless entries are in [0,1] and sum to 1 within tol.
  static ProbVector checked(std::span<const double> values, double tol = 1e-9);
  int argmax() const;
  double sum() const { return p[0] + p[1] + p[2]; }
};

struct ClassWeights {
  std::array<double, kNumClasses> w{1.0, 1.0, 1.0};
};

struct ParamGroup {
  std::string name;
  std::vector<NamedTensor> params;
};

struct ForwardOptions {
  bool training = false;
  std::uint64_t step = 0;  // keys the dropout stream
};

struct ForwardResult {
  Tensor logits;  // [N,3]
  Tensor probs;   // [N,3]
  // Includes "cam_target": the last convolutional feature map before pooling.
  std::map<std::string, Tensor> activations;

  std::vector<ProbVector> prob_vectors() const;
};

class Model {
 public:
  static Model build(const ModelSpec& spec, std::uint64_t seed);

  ForwardResult forward(Tape* tape, const Tensor& batch, ForwardOptions opts = {}) const;
  // Pooling + dropout + dense head applied to a cam_target activation.
  Tensor head_logits(Tape* tape, const Tensor& cam_target, ForwardOptions opts = {}) const;

  const ModelSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }
  std::span<const ParamGroup> groups() const { return groups_; }
  std::vector<NamedTensor> parameters() const;
  std::size_t parameter_count() const;

  // Every group except the classifier head.
  std::size_t base_group_count() const { return groups_.size() - 1; }
  void set_frozen(bool frozen);
  bool group_trainable(std::size_t group) const {
    return group >= static_cast<std::size_t>(spec_.frozen_prefix_len);
  }

  // Deep copy with independent parameter storage.
  Model clone() const;

  void zero_grad();
  bool parameters_finite() const;

  // `<dir>/model.json` (spec + seed) plus `<dir>/weights.{json,bin}`.
  void save(const std::filesystem::path& dir) const;
  static Model load(const std::filesystem::path& dir);

 private:
  Model() = default;
  void add_group(std::string name, std::vector<std::pair<std::string, Shape>> params,
                 std::uint64_t init_seed);
  const Tensor& param(const std::string& name) const;

  ForwardResult forward_mobile(Tape* tape, const Tensor& x, ForwardOptions opts) const;
  ForwardResult forward_dense(Tape* tape, const Tensor& x, ForwardOptions opts) const;

  ModelSpec spec_;
  std::uint64_t seed_ = 0;
  std::vector<ParamGroup> groups_;
  std::unordered_map<std::string, Tensor> by_name_;
};

}  // namespace neuroscope
