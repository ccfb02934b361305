#include "neuroscope/training/cv.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "neuroscope/common/rng.hpp"

namespace neuroscope {

void mean_sd(const std::vector<double>& v, double& mean, double& sd) {
  mean = sd = 0.0;
  if (v.empty()) return;
  for (double x : v) mean += x;
  mean /= double(v.size());
  if (v.size() < 2) return;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  sd = std::sqrt(ss / double(v.size() - 1));
}

std::uint64_t fold_model_seed(std::uint64_t master_seed, Family family, int fold) {
  const std::uint64_t fam = family == Family::mobile_mini ? 1 : 2;
  return derive_seed(derive_seed(master_seed, 0xF00D0000u + fam), static_cast<std::uint64_t>(fold));
}

std::vector<double> CVReport::fold_scores() const {
  std::vector<double> s;
  for (const auto& f : folds) s.push_back(f.val_metrics.accuracy);
  return s;
}

int CVReport::best_fold() const {
  if (folds.empty()) throw std::logic_error("CVReport has no folds");
  int best = 0;
  double loss = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < folds.size(); ++i) {
    const double l = folds[i].report.best_val_loss;
    if (std::isfinite(l) && l < loss) {
      loss = l;
      best = static_cast<int>(i);
    }
  }
  return folds[best].fold;
}

Json CVReport::to_json() const {
  Json fs = Json::array();
  for (const auto& f : folds) {
    fs.push_back(Json{{"fold", f.fold},
                      {"model_seed", f.model_seed},
                      {"best_epoch", f.report.best_epoch},
                      {"best_val_loss", f.report.best_val_loss},
                      {"stop_epoch", f.report.stop_epoch},
                      {"status", f.report.status},
                      {"val_metrics", f.val_metrics.to_json()}});
  }
  return Json{{"family", to_string(family)},
              {"folds", fs},
              {"fold_scores", fold_scores()},
              {"best_fold", folds.empty() ? Json(nullptr) : Json(best_fold())},
              {"mean_accuracy", mean_accuracy},
              {"sd_accuracy", sd_accuracy},
              {"mean_macro_f1", mean_macro_f1},
              {"sd_macro_f1", sd_macro_f1}};
}

namespace {
std::vector<Sample> gather(const std::vector<Sample>& samples, const std::vector<std::size_t>& idx) {
  std::vector<Sample> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(samples.at(i));
  return out;
}
}  // namespace

FoldResult run_fold(const std::vector<Sample>& samples, const ModelSpec& spec, const TrainConfig& cfg,
                    const FoldPlan& plan, int fold, std::uint64_t master_seed, const std::filesystem::path& out_dir,
                    const FoldCallback& on_epoch) {
  if (fold < 0 || fold >= static_cast<int>(plan.folds.size()))
    throw std::invalid_argument("fold index " + std::to_string(fold) + " outside the plan");
  const Fold& f = plan.folds[static_cast<std::size_t>(fold)];
  const std::vector<Sample> train = gather(samples, f.train), val = gather(samples, f.val);
  FoldResult r;
  r.fold = fold;
  r.model_seed = fold_model_seed(master_seed, spec.family, fold);
  Model model = Model::build(spec, r.model_seed);
  TrainConfig fc = cfg;
  fc.seed = derive_seed(r.model_seed, 0x7EED);
  const std::filesystem::path dir = out_dir.empty() ? out_dir : out_dir / ("fold_" + std::to_string(fold));
  r.report = fit(model, train, val, fc, dir, [&](const FitProgress& p) {
    if (on_epoch) on_epoch(fold, p);
  });
  const auto probs = predict(model, val);
  std::vector<int> truth, pred;
  for (std::size_t i = 0; i < val.size(); ++i) {
    truth.push_back(val[i].label);
    pred.push_back(probs[i].argmax());
  }
  r.val_metrics = metrics(ConfusionMatrix::from_labels(truth, pred));
  return r;
}

CVReport summarize_cv(Family family, std::vector<FoldResult> folds) {
  CVReport rep;
  rep.family = family;
  rep.folds = std::move(folds);
  std::vector<double> acc, f1;
  for (const auto& f : rep.folds) {
    acc.push_back(f.val_metrics.accuracy);
    f1.push_back(f.val_metrics.macro_f1);
  }
  mean_sd(acc, rep.mean_accuracy, rep.sd_accuracy);
  mean_sd(f1, rep.mean_macro_f1, rep.sd_macro_f1);
  return rep;
}

CVReport run_cv(const std::vector<Sample>& samples, const ModelSpec& spec, const TrainConfig& cfg,
                const FoldPlan& plan, std::uint64_t master_seed, const std::filesystem::path& out_dir,
                const FoldCallback& on_epoch) {
  std::vector<FoldResult> folds;
  for (int k = 0; k < plan.k; ++k) folds.push_back(run_fold(samples, spec, cfg, plan, k, master_seed, out_dir, on_epoch));
  return summarize_cv(spec.family, std::move(folds));
}

}  // namespace neuroscope
