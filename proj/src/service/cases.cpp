#include "neuroscope/service/cases.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>

#include "neuroscope/data/dataset_io.hpp"
#include "neuroscope/saliency/render.hpp"
#include "neuroscope/training/fit.hpp"

namespace neuroscope {

namespace fs = std::filesystem;

fs::path selected_checkpoint(const RunDir& run, Family family) {
  if (fs::exists(run.cv_report(family))) {
    const Json cv = read_json_file(run.cv_report(family));
    const int best = cv.at("best_fold").get<int>();
    const fs::path p = run.cv_dir(family) / ("fold_" + std::to_string(best)) / "checkpoint";
    if (!fs::exists(p / "model.json")) throw std::runtime_error("missing checkpoint " + p.string());
    return p;
  }
  const fs::path p = run.train_dir(family) / "checkpoint";
  if (!fs::exists(p / "model.json"))
    throw std::runtime_error("missing checkpoint for " + to_string(family) + " in " + run.root().string() +
                             " (run `train` or `cv` first)");
  return p;
}

EnsembleModels load_ensemble(const RunDir& run) {
  EnsembleModels e;
  for (Family f : {Family::mobile_mini, Family::dense_mini}) e.members.emplace_back(f, Model::load(selected_checkpoint(run, f)));
  return e;
}

CaseAnalysis analyze_sample(const EnsembleModels& models, const Sample& sample) {
  std::vector<ProbVector> probs;
  for (const auto& [f, m] : models.members) probs.push_back(predict(m, {sample}).at(0));
  CaseAnalysis a;
  a.prediction = soft_vote(probs);
  std::vector<SaliencyMap> maps;
  for (const auto& [f, m] : models.members) maps.push_back(gradcam_pp(m, sample.image, a.prediction.predicted_class));
  a.saliency = combine_maps(maps);
  return a;
}

Json ThresholdScores::to_json() const {
  Json j{{"threshold", threshold}, {"mask_pixels", mask.count()}};
  j["dice"] = overlap ? Json(overlap->dice) : Json(nullptr);
  j["iou"] = overlap ? Json(overlap->iou) : Json(nullptr);
  j["both_empty"] = overlap ? Json(overlap->both_empty) : Json(nullptr);
  return j;
}

void check_threshold(double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0))
    throw UsageError("threshold must be in (0, 1], got " + format_fixed(threshold, 4));
}

ThresholdScores score_threshold(const std::vector<double>& values, int width, int height,
                                const std::optional<RoiMask>& truth, double threshold) {
  check_threshold(threshold);
  ThresholdScores s;
  s.threshold = threshold;
  s.mask = threshold_top_fraction(values, width, height, threshold);
  if (truth) s.overlap = overlap(*truth, s.mask);
  return s;
}

RuleEvaluation evaluate_case_rules(const ImageGray& image, const std::optional<RoiMask>& truth,
                                   const RoiMask& saliency_mask, int prediction, const RuleConfig& cfg) {
  RuleEvaluation r;
  r.source = truth ? "mask" : "saliency";
  r.features = region_features(image, truth ? *truth : saliency_mask);
  r.results = evaluate_rules(r.features, prediction, cfg);
  triggered_rule(r.results);  // asserts mutual exclusion
  return r;
}

namespace {

Json probs_json(const ProbVector& p) { return Json(p.p); }

ProbVector probs_from(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return ProbVector::checked(v, 1e-6);
}

}  // namespace

Json CaseBundle::to_json() const {
  Json members = Json::object();
  for (const auto& [name, p] : member_probs) members[name] = probs_json(p);
  Json rr = Json::array();
  for (const auto& r : rules.results) rr.push_back(r.to_json());
  Json j{{"id", id},
         {"predicted_class", predicted_class},
         {"predicted_label", label_name(predicted_class)},
         {"member_probs", members},
         {"averaged_probs", probs_json(averaged_probs)},
         {"tie_broken", tie_broken},
         {"saliency", {{"layer", saliency_layer}, {"threshold", threshold}, {"file", saliency_path}}},
         {"rules", {{"source", rules.source}, {"features", rules.features.to_json()}, {"results", rr}}},
         {"artifacts",
          {{"image", image_path}, {"source", source_path}, {"overlay", overlay_path}, {"heatmap", heatmap_path}}}};
  j["true_label"] = true_label ? Json(*true_label) : Json(nullptr);
  j["overlap"] = overlap ? overlap->to_json() : Json(nullptr);
  j["artifacts"]["mask"] = mask_path ? Json(*mask_path) : Json(nullptr);
  return j;
}

CaseBundle CaseBundle::from_json(const Json& j) {
  CaseBundle b;
  b.id = j.at("id").get<std::string>();
  if (!j.at("true_label").is_null()) b.true_label = j.at("true_label").get<int>();
  b.predicted_class = j.at("predicted_class").get<int>();
  for (const auto& [name, p] : j.at("member_probs").items()) b.member_probs.emplace_back(name, probs_from(p));
  b.averaged_probs = probs_from(j.at("averaged_probs"));
  b.tie_broken = j.at("tie_broken").get<bool>();
  const Json& s = j.at("saliency");
  b.saliency_layer = s.at("layer").get<std::string>();
  b.threshold = s.at("threshold").get<double>();
  b.saliency_path = s.at("file").get<std::string>();
  const Json& r = j.at("rules");
  b.rules.source = r.at("source").get<std::string>();
  b.rules.features = RegionFeatures::from_json(r.at("features"));
  for (const auto& x : r.at("results")) b.rules.results.push_back(RuleResult::from_json(x));
  if (!j.at("overlap").is_null()) {
    OverlapScores o;
    o.dice = j.at("overlap").at("dice").get<double>();
    o.iou = j.at("overlap").at("iou").get<double>();
    o.both_empty = j.at("overlap").at("both_empty").get<bool>();
    b.overlap = o;
  }
  const Json& a = j.at("artifacts");
  b.image_path = a.at("image").get<std::string>();
  b.source_path = a.at("source").get<std::string>();
  b.overlay_path = a.at("overlay").get<std::string>();
  b.heatmap_path = a.at("heatmap").get<std::string>();
  if (!a.at("mask").is_null()) b.mask_path = a.at("mask").get<std::string>();
  if (b.predicted_class != b.averaged_probs.argmax())
    throw std::runtime_error("bundle " + b.id + ": predicted_class disagrees with averaged_probs");
  return b;
}

void write_doubles(const fs::path& path, const std::vector<double>& v) {
  static_assert(std::endian::native == std::endian::little, "little-endian host expected");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::vector<double> read_doubles(const fs::path& path) {
  const std::string bytes = read_text_file(path);
  if (bytes.size() % sizeof(double) != 0) throw std::runtime_error("truncated value file " + path.string());
  std::vector<double> v(bytes.size() / sizeof(double));
  std::memcpy(v.data(), bytes.data(), bytes.size());
  return v;
}

std::vector<CaseBundle> build_case_bundles(const RunDir& run, const std::vector<std::string>& ids) {
  const RunConfig cfg = run.load_config();
  const PhantomDataset ds = load_dataset(cfg.dataset);
  std::map<std::string, const Sample*> by_id;
  for (const auto& s : ds.samples) by_id[s.id] = &s;
  for (const auto& id : ids)
    if (!by_id.count(id)) throw UsageError("unknown case id '" + id + "'");
  const EnsembleModels models = load_ensemble(run);

  std::vector<CaseBundle> out;
  for (const auto& id : ids) {
    const Sample& s = *by_id.at(id);
    const CaseAnalysis a = analyze_sample(models, s);
    const ThresholdScores sc = score_threshold(a.saliency.values, a.saliency.width, a.saliency.height, s.mask,
                                               kDefaultThresholdFrac);
    CaseBundle b;
    b.id = id;
    b.true_label = s.label;
    b.predicted_class = a.prediction.predicted_class;
    for (std::size_t m = 0; m < models.members.size(); ++m)
      b.member_probs.emplace_back(to_string(models.members[m].first), a.prediction.member_probs[m]);
    b.averaged_probs = a.prediction.averaged;
    b.tie_broken = a.prediction.tie_broken;
    b.saliency_layer = a.saliency.layer;
    b.threshold = sc.threshold;
    b.rules = evaluate_case_rules(s.image, s.mask, sc.mask, b.predicted_class, cfg.rules);
    b.overlap = sc.overlap;

    const fs::path dir = run.cases_dir();
    fs::create_directories(dir);
    b.image_path = "cases/" + id + "_image.png";
    b.source_path = "cases/" + id + "_image.pgm";
    b.overlay_path = "cases/" + id + "_overlay.png";
    b.heatmap_path = "cases/" + id + "_heatmap.pgm";
    b.saliency_path = "cases/" + id + "_saliency.f64";
    write_png(run.root() / b.image_path, render_overlay(s.image, std::vector<double>(s.image.pixels.size(), 0.0)));
    write_pgm(run.root() / b.source_path, s.image);
    write_png(run.root() / b.overlay_path, render_overlay(s.image, a.saliency.values, s.mask));
    SaliencyMap thresholded = a.saliency;
    thresholded.binary = sc.mask;
    export_heatmap(run.root() / b.heatmap_path, thresholded, sc.overlap);
    write_doubles(run.root() / b.saliency_path, a.saliency.values);
    if (s.mask) {
      b.mask_path = "cases/" + id + "_mask.pbm";
      write_pbm(run.root() / *b.mask_path, *s.mask);
    }
    write_json_file(dir / (id + ".json"), b.to_json());
    out.push_back(std::move(b));
  }
  return out;
}

std::vector<std::string> representative_ids(const std::vector<Sample>& test, int count) {
  std::array<std::vector<std::string>, kNumClasses> per_class;
  for (const auto& s : test) per_class.at(static_cast<std::size_t>(s.label)).push_back(s.id);
  for (auto& v : per_class) std::sort(v.begin(), v.end());
  std::vector<std::string> out;
  for (std::size_t round = 0; static_cast<int>(out.size()) < count; ++round) {
    bool any = false;
    for (const auto& v : per_class) {
      if (round < v.size() && static_cast<int>(out.size()) < count) {
        out.push_back(v[round]);
        any = true;
      }
    }
    if (!any) break;
  }
  return out;
}

bool valid_case_id(const std::string& id) {
  if (id.empty() || id == "." || id == "..") return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-' || c == '.';
  });
}

std::vector<std::string> list_case_ids(const RunDir& run) {
  std::vector<std::string> ids;
  if (!fs::exists(run.cases_dir())) return ids;
  for (const auto& e : fs::directory_iterator(run.cases_dir()))
    if (e.path().extension() == ".json" && fs::exists(run.cases_dir() / (e.path().stem().string() + "_image.png")))
      ids.push_back(e.path().stem().string());
  std::sort(ids.begin(), ids.end());
  return ids;
}

std::optional<CaseBundle> load_bundle(const RunDir& run, const std::string& id) {
  if (!valid_case_id(id)) return std::nullopt;
  const fs::path p = run.cases_dir() / (id + ".json");
  if (!fs::exists(p)) return std::nullopt;
  return CaseBundle::from_json(read_json_file(p));
}

BundleData load_bundle_data(const RunDir& run, const CaseBundle& bundle) {
  BundleData d{bundle, read_pgm(run.root() / bundle.source_path), read_doubles(run.root() / bundle.saliency_path),
               std::nullopt};
  if (bundle.mask_path) d.mask = read_pbm(run.root() / *bundle.mask_path);
  if (d.saliency.size() != d.image.pixels.size())
    throw std::runtime_error("bundle " + bundle.id + ": saliency size does not match image");
  return d;
}

}  // namespace neuroscope
