#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "neuroscope/common/json_util.hpp"
#include "neuroscope/data/phantom.hpp"
#include "neuroscope/training/cv.hpp"
#include "neuroscope/training/split.hpp"
#include "neuroscope/service/run.hpp"

namespace neuroscope {

void generate_dataset(const PhantomParams& params, const std::filesystem::path& out);

// Writes run.json, split.json (70:30 stratified) and folds.json (over the
// training part). An existing run with a different configuration is rejected
// once it holds trained models.
RunDir prepare_run(const RunDir& run, const RunConfig& cfg);

struct Partition {
  RunConfig config;
  PhantomDataset dataset;
  SplitResult split;
  std::vector<Sample> train, test;
  FoldPlan plan;  // indices into `train`
};
Partition load_partition(const RunDir& run);

// Single fit on the training part with a stratified 20% validation hold-out.
TrainReport train_model(const RunDir& run, Family family, std::ostream& log);
// k-fold CV on the training part; writes <family>/cv.json and per-fold checkpoints.
CVReport cv_model(const RunDir& run, Family family, std::ostream& log);
// Soft-vote scores of the fold models on each fold's validation set
// (ensemble/cv.json). Requires both families' CV.
Json ensemble_cv(const RunDir& run);

struct TextReport {
  Json json;
  std::string text;
};

// Held-out test metrics for both members and both voting schemes
// (eval.json, eval.txt, predictions.jsonl), then case bundles for a
// representative test subset.
TextReport evaluate_run(const RunDir& run, std::ostream& log);

// Ensemble prediction and thresholded-saliency overlap for one case; when
// out_dir is given the heatmap, its JSON and the overlay PNG are written there.
Json explain_case(const RunDir& run, const std::string& id, double threshold,
                  const std::filesystem::path& out_dir = {});

// Rules over the test set. source: "mask" (ground-truth region) or
// "saliency" (thresholded ensemble map).
TextReport rules_run(const RunDir& run, const std::string& source);

// Paired comparison of fold scores: the first entry against each other one,
// plus a Friedman test over all. Entries are score files (a JSON object with
// "fold_scores" or "fold_metrics"), directories containing cv.json, or such
// paths relative to the runs root. metric: accuracy | macro_f1 | val_loss.
TextReport compare_runs(const std::vector<std::string>& entries, const std::string& metric);

}  // namespace neuroscope
