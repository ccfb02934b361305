#include "neuroscope/service/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>

#include "neuroscope/common/rng.hpp"
#include "neuroscope/data/dataset_io.hpp"
#include "neuroscope/ensemble/voting.hpp"
#include "neuroscope/evalstats/metrics.hpp"
#include "neuroscope/evalstats/stats.hpp"
#include "neuroscope/evalstats/tables.hpp"
#include "neuroscope/networks/loss.hpp"
#include "neuroscope/rules/report.hpp"
#include "neuroscope/saliency/render.hpp"
#include "neuroscope/service/cases.hpp"

namespace neuroscope {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSplitStream = 0x5B117;
constexpr std::uint64_t kFoldStream = 0xF01D5;
constexpr std::uint64_t kTrainValStream = 0x7AE1;
constexpr std::uint64_t kTrainModelStream = 0x70DE1;

std::vector<int> labels_of(const std::vector<Sample>& s) {
  std::vector<int> out;
  for (const auto& x : s) out.push_back(x.label);
  return out;
}

std::vector<Sample> gather(const std::vector<Sample>& s, const std::vector<std::size_t>& idx) {
  std::vector<Sample> out;
  for (std::size_t i : idx) out.push_back(s.at(i));
  return out;
}

Json ids_of(const std::vector<Sample>& s) {
  Json a = Json::array();
  for (const auto& x : s) a.push_back(x.id);
  return a;
}

bool has_models(const RunDir& run) {
  for (Family f : {Family::mobile_mini, Family::dense_mini})
    if (fs::exists(run.family_dir(f))) return true;
  return false;
}

ModelSpec spec_for(Family f, const PhantomDataset& ds) {
  return ModelSpec::defaults(f, ds.samples.at(0).image.width);
}

FitCallback epoch_logger(std::ostream& log, const std::string& tag) {
  return [&log, tag](const FitProgress& p) {
    const EpochRecord& r = p.record;
    log << "[" << tag << "] epoch " << r.epoch << " train_loss " << format_fixed(r.train_loss, 4) << " val_loss "
        << format_fixed(r.val_loss, 4) << " val_acc " << format_fixed(r.val_accuracy, 3) << " lr " << r.lr
        << (r.frozen ? " (frozen base)" : "") << (p.decision.stop ? " -> early stop" : "") << "\n";
  };
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

void generate_dataset(const PhantomParams& params, const fs::path& out) {
  save_dataset(generate_phantoms(params), out);
}

RunDir prepare_run(const RunDir& run, const RunConfig& cfg) {
  cfg.validate();
  if (cfg.dataset.empty()) throw UsageError("no dataset given (use --data)");
  if (!fs::exists(fs::path(cfg.dataset) / "manifest.json"))
    throw UsageError("no dataset at " + cfg.dataset + " (missing manifest.json)");
  if (run.exists()) {
    const Json stored = read_json_file(run.config());
    if (stored == cfg.to_json() && fs::exists(run.split()) && fs::exists(run.folds())) return run;
    if (has_models(run))
      throw UsageError("run " + run.root().string() + " already holds models trained with a different configuration");
  }
  const PhantomDataset ds = load_dataset(cfg.dataset);
  const std::vector<int> labels = labels_of(ds.samples);
  const SplitResult split = stratified_split(labels, cfg.test_fraction, derive_seed(cfg.seed, kSplitStream));
  const std::vector<Sample> train = gather(ds.samples, split.train);
  const FoldPlan plan = make_folds(labels_of(train), cfg.folds, derive_seed(cfg.seed, kFoldStream));
  write_json_file(run.config(), cfg.to_json());
  write_json_file(run.split(), Json{{"test_fraction", cfg.test_fraction},
                                    {"train", ids_of(train)},
                                    {"test", ids_of(gather(ds.samples, split.test))},
                                    {"train_index", split.train},
                                    {"test_index", split.test}});
  write_json_file(run.folds(), plan.to_json());
  return run;
}

Partition load_partition(const RunDir& run) {
  Partition p;
  p.config = run.load_config();
  p.dataset = load_dataset(p.config.dataset);
  const Json split = read_json_file(run.split());
  p.split.train = split.at("train_index").get<std::vector<std::size_t>>();
  p.split.test = split.at("test_index").get<std::vector<std::size_t>>();
  p.train = gather(p.dataset.samples, p.split.train);
  p.test = gather(p.dataset.samples, p.split.test);
  if (ids_of(p.train) != split.at("train") || ids_of(p.test) != split.at("test"))
    throw std::runtime_error("dataset " + p.config.dataset + " no longer matches the run's split");
  p.plan = FoldPlan::from_json(read_json_file(run.folds()));
  return p;
}

TrainReport train_model(const RunDir& run, Family family, std::ostream& log) {
  const Partition p = load_partition(run);
  const auto t0 = std::chrono::steady_clock::now();
  const SplitResult inner = stratified_split(labels_of(p.train), 0.2, derive_seed(p.config.seed, kTrainValStream));
  const std::vector<Sample> train = gather(p.train, inner.train), val = gather(p.train, inner.test);
  const std::uint64_t model_seed =
      derive_seed(p.config.seed, kTrainModelStream + static_cast<std::uint64_t>(family));
  Model model = Model::build(spec_for(family, p.dataset), model_seed);
  TrainConfig cfg = p.config.train(family);
  cfg.seed = derive_seed(model_seed, 0x7EED);
  const TrainReport rep = fit(model, train, val, cfg, run.train_dir(family), epoch_logger(log, to_string(family)));
  write_json_file(run.train_dir(family) / "report.json", rep.to_json());
  log << "[" << to_string(family) << "] trained in " << format_fixed(seconds_since(t0), 1) << " s, status "
      << rep.status << "\n";
  if (rep.status != "ok") throw std::runtime_error(to_string(family) + " training diverged: " + rep.error);
  return rep;
}

CVReport cv_model(const RunDir& run, Family family, std::ostream& log) {
  const Partition p = load_partition(run);
  const ModelSpec spec = spec_for(family, p.dataset);
  std::vector<FoldResult> folds;
  for (int k = 0; k < p.plan.k; ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::string tag = to_string(family) + " fold " + std::to_string(k);
    const FitCallback cb = epoch_logger(log, tag);
    FoldResult r = run_fold(p.train, spec, p.config.train(family), p.plan, k, p.config.seed, run.cv_dir(family),
                            [&](int, const FitProgress& fp) { cb(fp); });
    write_json_file(run.cv_dir(family) / ("fold_" + std::to_string(k)) / "report.json", r.report.to_json());
    log << "[" << tag << "] val accuracy " << format_fixed(r.val_metrics.accuracy, 3) << " in "
        << format_fixed(seconds_since(t0), 1) << " s\n";
    if (r.report.status != "ok") throw std::runtime_error(tag + " diverged: " + r.report.error);
    folds.push_back(std::move(r));
  }
  CVReport rep = summarize_cv(family, std::move(folds));
  write_json_file(run.cv_report(family), rep.to_json());
  return rep;
}

Json ensemble_cv(const RunDir& run) {
  const Partition p = load_partition(run);
  Json acc = Json::array(), f1 = Json::array(), loss = Json::array();
  std::vector<double> accs;
  for (int k = 0; k < p.plan.k; ++k) {
    const std::vector<Sample> val = gather(p.train, p.plan.folds.at(static_cast<std::size_t>(k)).val);
    std::vector<std::vector<ProbVector>> member;
    for (Family f : {Family::mobile_mini, Family::dense_mini}) {
      const fs::path ckpt = run.cv_dir(f) / ("fold_" + std::to_string(k)) / "checkpoint";
      if (!fs::exists(ckpt / "model.json")) throw std::runtime_error("missing checkpoint " + ckpt.string());
      member.push_back(predict(Model::load(ckpt), val));
    }
    std::vector<int> truth, pred;
    double ce = 0.0;
    for (std::size_t i = 0; i < val.size(); ++i) {
      const EnsemblePrediction e = soft_vote(std::vector<ProbVector>{member[0][i], member[1][i]});
      truth.push_back(val[i].label);
      pred.push_back(e.predicted_class);
      ce += -std::log(e.averaged.p[static_cast<std::size_t>(val[i].label)] + kLogEpsilon);
    }
    const MetricsReport m = metrics(ConfusionMatrix::from_labels(truth, pred));
    acc.push_back(m.accuracy);
    accs.push_back(m.accuracy);
    f1.push_back(m.macro_f1);
    loss.push_back(ce / double(val.size()));
  }
  double mean = 0, sd = 0;
  mean_sd(accs, mean, sd);
  const Json j{{"name", "ensemble"},
               {"fold_scores", acc},
               {"fold_metrics", {{"accuracy", acc}, {"macro_f1", f1}, {"val_loss", loss}}},
               {"mean_accuracy", mean},
               {"sd_accuracy", sd}};
  write_json_file(run.ensemble_cv(), j);
  return j;
}

TextReport evaluate_run(const RunDir& run, std::ostream& log) {
  const Partition p = load_partition(run);
  const EnsembleModels models = load_ensemble(run);
  std::vector<std::vector<ProbVector>> member;
  for (const auto& [f, m] : models.members) member.push_back(predict(m, p.test));

  const std::vector<int> truth = labels_of(p.test);
  std::vector<std::vector<int>> member_pred(member.size());
  std::vector<int> soft, hard;
  std::string rows;
  for (std::size_t i = 0; i < p.test.size(); ++i) {
    std::vector<ProbVector> probs;
    std::vector<int> labels;
    for (std::size_t m = 0; m < member.size(); ++m) {
      probs.push_back(member[m][i]);
      labels.push_back(member[m][i].argmax());
      member_pred[m].push_back(labels.back());
    }
    const EnsemblePrediction e = soft_vote(probs);
    soft.push_back(e.predicted_class);
    hard.push_back(hard_vote(labels, probs));
    Json row = prediction_row(p.test[i].id, e);
    row["true_label"] = p.test[i].label;
    row["hard_vote"] = hard.back();
    rows += row.dump() + "\n";
  }
  write_text_file(run.predictions(), rows);

  std::vector<std::pair<std::string, MetricsReport>> table;
  Json models_json = Json::object(), confusion = Json::object(), checkpoints = Json::object();
  auto add = [&](const std::string& name, const std::vector<int>& pred) {
    const ConfusionMatrix cm = ConfusionMatrix::from_labels(truth, pred);
    const MetricsReport mr = metrics(cm);
    table.emplace_back(name, mr);
    models_json[name] = mr.to_json();
    confusion[name] = cm.to_json();
  };
  for (std::size_t m = 0; m < models.members.size(); ++m) {
    const Family f = models.members[m].first;
    add(to_string(f), member_pred[m]);
    checkpoints[to_string(f)] = fs::relative(selected_checkpoint(run, f), run.root()).generic_string();
  }
  add("ensemble_soft", soft);
  add("ensemble_hard", hard);

  TextReport out;
  out.text = format_metrics_table(table);
  out.json = Json{{"test_size", p.test.size()},
                  {"checkpoints", checkpoints},
                  {"metrics", models_json},
                  {"confusion", confusion}};
  write_json_file(run.eval_report(), out.json);
  write_text_file(run.eval_table(), out.text);

  const auto ids = representative_ids(p.test, p.config.bundle_count);
  build_case_bundles(run, ids);
  log << "built " << ids.size() << " case bundles under " << run.cases_dir().string() << "\n";
  return out;
}

Json explain_case(const RunDir& run, const std::string& id, double threshold, const fs::path& out_dir) {
  check_threshold(threshold);
  const RunConfig cfg = run.load_config();
  const PhantomDataset ds = load_dataset(cfg.dataset);
  const Sample* sample = nullptr;
  for (const auto& s : ds.samples)
    if (s.id == id) sample = &s;
  if (!sample) throw UsageError("unknown case id '" + id + "'");
  const EnsembleModels models = load_ensemble(run);
  const CaseAnalysis a = analyze_sample(models, *sample);
  const ThresholdScores sc =
      score_threshold(a.saliency.values, a.saliency.width, a.saliency.height, sample->mask, threshold);
  Json j = sc.to_json();
  j["id"] = id;
  j["true_label"] = sample->label;
  j["predicted_class"] = a.prediction.predicted_class;
  j["averaged_probs"] = a.prediction.averaged.p;
  j["layer"] = a.saliency.layer;
  if (!out_dir.empty()) {
    SaliencyMap m = a.saliency;
    m.threshold_frac = threshold;
    m.binary = sc.mask;
    export_heatmap(out_dir / (id + "_heatmap.pgm"), m, sc.overlap);
    write_png(out_dir / (id + "_overlay.png"), render_overlay(sample->image, a.saliency.values, sample->mask));
  }
  return j;
}

TextReport rules_run(const RunDir& run, const std::string& source) {
  if (source != "mask" && source != "saliency") throw UsageError("--source must be 'mask' or 'saliency'");
  const Partition p = load_partition(run);
  std::map<std::string, int> predicted;
  if (fs::exists(run.predictions())) {
    std::ifstream in(run.predictions());
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) {
        const Json row = Json::parse(line);
        predicted[row.at("id").get<std::string>()] = row.at("predicted_class").get<int>();
      }
  }
  std::optional<EnsembleModels> models;
  if (source == "saliency" || predicted.size() < p.test.size()) models = load_ensemble(run);

  std::vector<RuleReportRow> rows;
  int triggered = 0, truth_match = 0, pred_match = 0;
  for (const auto& s : p.test) {
    std::optional<CaseAnalysis> a;
    if (models) a = analyze_sample(*models, s);
    const int pred = predicted.count(s.id) ? predicted.at(s.id) : a->prediction.predicted_class;
    RoiMask region;
    if (source == "mask") {
      if (!s.mask) throw std::runtime_error("case " + s.id + " has no ground-truth mask");
      region = *s.mask;
    } else {
      region = threshold_top_fraction(a->saliency.values, a->saliency.width, a->saliency.height, kDefaultThresholdFrac);
    }
    const auto results = evaluate_rules(region_features(s.image, region), pred, p.config.rules);
    const auto fired = triggered_rule(results);
    rows.push_back({s.id, s.label, pred, fired});
    if (fired) {
      ++triggered;
      if (implied_class(fired->rule_id) == s.label) ++truth_match;
      if (fired->matches_prediction.value_or(false)) ++pred_match;
    }
  }
  TextReport out;
  out.text = format_rule_table(rows);
  const double rate = triggered ? double(truth_match) / triggered : 0.0;
  out.json = Json{{"source", source},
                  {"cases", rows.size()},
                  {"triggered", triggered},
                  {"implied_matches_truth", truth_match},
                  {"implied_matches_truth_rate", triggered ? Json(rate) : Json(nullptr)},
                  {"matches_prediction", pred_match},
                  {"rows", rule_table_json(rows)}};
  const std::string suffix = source == "mask" ? "" : "_saliency";
  write_json_file(run.root() / ("rules" + suffix + ".json"), out.json);
  write_text_file(run.root() / ("rules" + suffix + ".txt"), out.text);
  return out;
}

namespace {

struct ScoreSet {
  std::string name;
  std::vector<double> values;
};

Json resolve_scores(const std::string& entry, fs::path& where) {
  for (const fs::path& base : {fs::path(entry), runs_root() / entry}) {
    if (fs::is_regular_file(base)) {
      where = base;
      return read_json_file(base);
    }
    if (fs::is_directory(base) && fs::exists(base / "cv.json")) {
      where = base / "cv.json";
      return read_json_file(where);
    }
  }
  throw UsageError("no fold scores found for '" + entry + "' (expected a score file or a directory with cv.json)");
}

ScoreSet extract_scores(const std::string& entry, const std::string& metric) {
  fs::path where;
  const Json j = resolve_scores(entry, where);
  ScoreSet s;
  s.name = j.contains("name") ? j.at("name").get<std::string>()
           : j.contains("family") ? j.at("family").get<std::string>()
                                  : entry;
  try {
    if (j.contains("fold_metrics") && j.at("fold_metrics").contains(metric)) {
      s.values = j.at("fold_metrics").at(metric).get<std::vector<double>>();
    } else if (metric == "accuracy" && j.contains("fold_scores")) {
      s.values = j.at("fold_scores").get<std::vector<double>>();
    } else if (j.contains("folds")) {
      for (const auto& f : j.at("folds"))
        s.values.push_back(metric == "macro_f1"   ? f.at("val_metrics").at("macro").at("f1").get<double>()
                           : metric == "val_loss" ? f.at("best_val_loss").get<double>()
                                                  : f.at("val_metrics").at("accuracy").get<double>());
    } else {
      throw UsageError(where.string() + " has no '" + metric + "' fold scores");
    }
  } catch (const Json::exception& e) {
    throw UsageError(where.string() + ": malformed fold scores: " + e.what());
  }
  return s;
}

}  // namespace

TextReport compare_runs(const std::vector<std::string>& entries, const std::string& metric) {
  if (metric != "accuracy" && metric != "macro_f1" && metric != "val_loss")
    throw UsageError("--metric must be accuracy, macro_f1 or val_loss");
  if (entries.size() < 2) throw UsageError("compare needs at least two score sets");
  std::vector<ScoreSet> sets;
  for (const auto& e : entries) sets.push_back(extract_scores(e, metric));
  const std::size_t n = sets[0].values.size();
  if (n < 2) throw UsageError("compare needs at least two folds per score set");
  for (const auto& s : sets)
    if (s.values.size() != n)
      throw UsageError("score sets differ in fold count (" + sets[0].name + ": " + std::to_string(n) + ", " + s.name +
                       ": " + std::to_string(s.values.size()) + ")");

  std::vector<std::vector<double>> table;
  for (const auto& s : sets) table.push_back(s.values);
  const FriedmanResult fr = friedman_test(table);

  std::vector<ComparisonColumn> cols;
  Json comparisons = Json::array();
  for (std::size_t j = 1; j < sets.size(); ++j) {
    StatReport r;
    r.friedman = fr;
    r.n = static_cast<int>(n);
    r.k = static_cast<int>(sets.size());
    try {
      r.t = paired_t_test(sets[0].values, sets[j].values);
      r.cohens_d = cohens_d_paired(sets[0].values, sets[j].values);
    } catch (const DegenerateError&) {
      r.degenerate = true;
      r.t.df = static_cast<int>(n) - 1;
    }
    const std::string name = sets[0].name + " vs " + sets[j].name;
    cols.push_back({name, r});
    Json c = r.to_json();
    c["comparison"] = name;
    comparisons.push_back(c);
  }
  Json scores = Json::object();
  for (const auto& s : sets) scores[s.name] = s.values;
  TextReport out;
  out.text = format_stats_table(cols);
  out.json = Json{{"metric", metric}, {"scores", scores}, {"comparisons", comparisons}};
  return out;
}

}  // namespace neuroscope
