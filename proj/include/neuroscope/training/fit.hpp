#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "neuroscope/common/json_util.hpp"
#include "neuroscope/data/augment.hpp"
#include "neuroscope/data/image.hpp"
#include "neuroscope/networks/model.hpp"
#include "neuroscope/training/adam.hpp"
#include "neuroscope/training/schedule.hpp"

namespace neuroscope {

struct TrainConfig {
  double learning_rate = 0.0005;
  int batch_size = 64;
  int epochs = 30;
  int early_stop_patience = 5;
  double plateau_factor = 0.1;
  int plateau_patience = 2;
  double min_lr = 1e-6;
  AdamConfig adam;
  std::uint64_t seed = 0;
  int freeze_epochs = 3;
  bool augment = true;  // one augmented copy per training sample
  AugmentConfig augmentation;
  bool class_weights = true;

  // 0.0005 for mobile_mini, 0.0003 for dense_mini.
  static TrainConfig defaults(Family family);
  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  Json to_json() const;
  // Missing keys keep their defaults for `family`.
  static TrainConfig from_json(const Json& j, Family family);
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0, train_accuracy = 0;
  double val_loss = 0, val_accuracy = 0;
  double lr = 0;
  bool frozen = false;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_val_loss = 0;
  int stop_epoch = 0;
  bool early_stopped = false;
  std::string status = "ok";  // "ok" | "diverged"
  std::string error;          // set when diverged
  std::string checkpoint;     // relative to the fit output directory
  std::vector<double> lr_trace;

  Json to_json() const;
  static TrainReport from_json(const Json& j);
};

struct FitProgress {
  const EpochRecord& record;
  const EpochDecision& decision;
};
using FitCallback = std::function<void(const FitProgress&)>;

// Stacks images into [N,1,S,S].
Tensor batch_tensor(const std::vector<const Sample*>& samples);

// Unweighted mean cross-entropy and accuracy in inference mode.
struct EvalResult {
  double loss = 0, accuracy = 0;
  std::vector<ProbVector> probs;
};
EvalResult evaluate(const Model& model, const std::vector<Sample>& samples, int batch_size = 64);

std::vector<ProbVector> predict(const Model& model, const std::vector<Sample>& samples, int batch_size = 64);

// Trains in place. On return the model holds the weights of the epoch with the
// lowest validation loss; when `out_dir` is non-empty that checkpoint is saved
// under `out_dir/checkpoint`. A non-finite loss or gradient ends training with
// status "diverged" and the partial trace (the model keeps the best weights
// seen so far). Throws std::invalid_argument on empty sets or bad config.
TrainReport fit(Model& model, const std::vector<Sample>& train, const std::vector<Sample>& val,
                const TrainConfig& cfg, const std::filesystem::path& out_dir = {},
                const FitCallback& on_epoch = {});

// Augmented training pool: originals followed by one augmented copy each.
std::vector<Sample> augmented_pool(const std::vector<Sample>& train, const AugmentConfig& cfg,
                                   std::uint64_t seed);

}  // namespace neuroscope
