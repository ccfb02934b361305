#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "neuroscope/common/json_util.hpp"
#include "neuroscope/networks/model.hpp"
#include "neuroscope/rules/rules.hpp"
#include "neuroscope/training/fit.hpp"

namespace neuroscope {

// Validation failure in user input (flags, config, request bodies): exit 1.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// NEUROSCOPE_RUNS_DIR when set, otherwise ./runs.
std::filesystem::path runs_root();

// Training preset for phantom-scale runs: library defaults except batch 8.
TrainConfig desk_train_config(Family family);

struct RunConfig {
  std::uint64_t seed = 0;
  std::string dataset;  // directory written by `gen`
  double test_fraction = 0.30;
  int folds = 5;
  int bundle_count = 5;
  TrainConfig mobile = desk_train_config(Family::mobile_mini);
  TrainConfig dense = desk_train_config(Family::dense_mini);
  RuleConfig rules;

  const TrainConfig& train(Family f) const { return f == Family::mobile_mini ? mobile : dense; }
  TrainConfig& train(Family f) { return f == Family::mobile_mini ? mobile : dense; }

  void validate() const;
  Json to_json() const;
  // Keys: seed, dataset, test_fraction, folds, bundle_count, rules,
  // train (applied to both families), mobile_mini, dense_mini.
  static RunConfig from_json(const Json& j);
};

// Layout of runs/<run>/.
class RunDir {
 public:
  explicit RunDir(std::filesystem::path root) : root_(std::move(root)) {}

  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path config() const { return root_ / "run.json"; }
  std::filesystem::path split() const { return root_ / "split.json"; }
  std::filesystem::path folds() const { return root_ / "folds.json"; }
  std::filesystem::path family_dir(Family f) const { return root_ / to_string(f); }
  std::filesystem::path cv_report(Family f) const { return family_dir(f) / "cv.json"; }
  std::filesystem::path cv_dir(Family f) const { return family_dir(f) / "cv"; }
  std::filesystem::path train_dir(Family f) const { return family_dir(f) / "train"; }
  std::filesystem::path ensemble_cv() const { return root_ / "ensemble" / "cv.json"; }
  std::filesystem::path eval_report() const { return root_ / "eval.json"; }
  std::filesystem::path eval_table() const { return root_ / "eval.txt"; }
  std::filesystem::path predictions() const { return root_ / "predictions.jsonl"; }
  std::filesystem::path rules_report() const { return root_ / "rules.json"; }
  std::filesystem::path rules_table() const { return root_ / "rules.txt"; }
  std::filesystem::path cases_dir() const { return root_ / "cases"; }
  std::filesystem::path scores() const { return root_ / "scores.jsonl"; }

  bool exists() const { return std::filesystem::exists(config()); }
  RunConfig load_config() const;

 private:
  std::filesystem::path root_;
};

// `name` is a path if it contains a separator or already exists, otherwise a
// run name under runs_root().
RunDir resolve_run(const std::string& name);

}  // namespace neuroscope
