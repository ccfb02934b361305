#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "neuroscope/evalstats/metrics.hpp"
#include "neuroscope/training/fit.hpp"
#include "neuroscope/training/split.hpp"

namespace neuroscope {

struct FoldResult {
  int fold = 0;
  std::uint64_t model_seed = 0;
  TrainReport report;
  MetricsReport val_metrics;
};

struct CVReport {
  Family family = Family::mobile_mini;
  std::vector<FoldResult> folds;
  double mean_accuracy = 0, sd_accuracy = 0;
  double mean_macro_f1 = 0, sd_macro_f1 = 0;

  // per-fold validation accuracy, the unit compared across models
  std::vector<double> fold_scores() const;
  // index of the fold with the lowest best validation loss
  int best_fold() const;
  Json to_json() const;
};

// Mean and sample standard deviation (n-1); sd is 0 for a single value.
void mean_sd(const std::vector<double>& v, double& mean, double& sd);

std::uint64_t fold_model_seed(std::uint64_t master_seed, Family family, int fold);

using FoldCallback = std::function<void(int fold, const FitProgress&)>;

// Trains one fresh model per fold (seed from fold_model_seed); fold models are
// saved under `out_dir/fold_<k>/` when out_dir is non-empty.
CVReport run_cv(const std::vector<Sample>& samples, const ModelSpec& spec, const TrainConfig& cfg,
                const FoldPlan& plan, std::uint64_t master_seed, const std::filesystem::path& out_dir = {},
                const FoldCallback& on_epoch = {});

// Single fold of the above; exposed so folds can be run one at a time.
FoldResult run_fold(const std::vector<Sample>& samples, const ModelSpec& spec, const TrainConfig& cfg,
                    const FoldPlan& plan, int fold, std::uint64_t master_seed,
                    const std::filesystem::path& out_dir = {}, const FoldCallback& on_epoch = {});

CVReport summarize_cv(Family family, std::vector<FoldResult> folds);

}  // namespace neuroscope
