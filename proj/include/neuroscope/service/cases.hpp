#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "neuroscope/common/json_util.hpp"
#include "neuroscope/data/image.hpp"
#include "neuroscope/ensemble/voting.hpp"
#include "neuroscope/networks/model.hpp"
#include "neuroscope/rules/features.hpp"
#include "neuroscope/rules/rules.hpp"
#include "neuroscope/saliency/gradcam.hpp"
#include "neuroscope/saliency/overlap.hpp"
#include "neuroscope/service/run.hpp"

namespace neuroscope {

// Ensemble members in fixed order (mobile_mini, dense_mini).
struct EnsembleModels {
  std::vector<std::pair<Family, Model>> members;
};

// Checkpoint used for evaluation: the best CV fold when a CV report exists,
// otherwise the `train` checkpoint. Throws std::runtime_error when neither exists.
std::filesystem::path selected_checkpoint(const RunDir& run, Family family);
EnsembleModels load_ensemble(const RunDir& run);

// Soft-vote prediction and ensemble Grad-CAM++ map for the predicted class.
struct CaseAnalysis {
  EnsemblePrediction prediction;
  SaliencyMap saliency;
};
CaseAnalysis analyze_sample(const EnsembleModels& models, const Sample& sample);

// The one code path behind every thresholded-overlap number (CLI, bundles, API).
struct ThresholdScores {
  double threshold = kDefaultThresholdFrac;
  RoiMask mask;
  std::optional<OverlapScores> overlap;  // null without a ground-truth mask

  Json to_json() const;  // {threshold, mask_pixels, dice, iou, both_empty}
};
// Throws UsageError unless threshold is in (0, 1].
void check_threshold(double threshold);
ThresholdScores score_threshold(const std::vector<double>& values, int width, int height,
                                const std::optional<RoiMask>& truth, double threshold);

// Region for the rules: the ground-truth mask when present, else the
// thresholded saliency.
struct RuleEvaluation {
  std::string source;  // "mask" | "saliency"
  RegionFeatures features;
  std::vector<RuleResult> results;
};
RuleEvaluation evaluate_case_rules(const ImageGray& image, const std::optional<RoiMask>& truth,
                                   const RoiMask& saliency_mask, int prediction, const RuleConfig& cfg);

// Persisted under runs/<run>/cases/<id>.json; paths are relative to the run.
struct CaseBundle {
  std::string id;
  std::optional<int> true_label;
  int predicted_class = 0;
  std::vector<std::pair<std::string, ProbVector>> member_probs;
  ProbVector averaged_probs;
  bool tie_broken = false;
  std::string saliency_layer;
  double threshold = kDefaultThresholdFrac;
  RuleEvaluation rules;
  std::optional<OverlapScores> overlap;
  std::string image_path, overlay_path, heatmap_path, saliency_path, source_path;
  std::optional<std::string> mask_path;

  Json to_json() const;
  static CaseBundle from_json(const Json& j);
};

// Builds and writes one bundle per id (JSON, image PNG and 16-bit PGM copy,
// overlay PNG, 8-bit heatmap PGM, raw saliency values, copy of the mask). Throws UsageError
// for an unknown id and std::runtime_error for a missing checkpoint.
std::vector<CaseBundle> build_case_bundles(const RunDir& run, const std::vector<std::string>& ids);

// Deterministic representative pick from the test set: classes in turn,
// lowest ids first.
std::vector<std::string> representative_ids(const std::vector<Sample>& test, int count);

// Bundle access used by the review service. Bundle ids are restricted to
// [A-Za-z0-9_.-] so they cannot escape the cases directory.
bool valid_case_id(const std::string& id);
std::vector<std::string> list_case_ids(const RunDir& run);
std::optional<CaseBundle> load_bundle(const RunDir& run, const std::string& id);

// Stored bundle inputs needed to recompute thresholds.
struct BundleData {
  CaseBundle bundle;
  ImageGray image;
  std::vector<double> saliency;  // bit-exact copy of the map
  std::optional<RoiMask> mask;
};
BundleData load_bundle_data(const RunDir& run, const CaseBundle& bundle);

// Raw little-endian float64 values, for bit-exact round trips.
void write_doubles(const std::filesystem::path& path, const std::vector<double>& v);
std::vector<double> read_doubles(const std::filesystem::path& path);

}  // namespace neuroscope
