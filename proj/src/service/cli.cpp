#include "neuroscope/service/cli.hpp"

#include <pthread.h>
#include <signal.h>

#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "neuroscope/data/dataset_io.hpp"
#include "neuroscope/service/cases.hpp"
#include "neuroscope/service/http_api.hpp"
#include "neuroscope/service/likert.hpp"
#include "neuroscope/service/pipeline.hpp"

namespace neuroscope {

namespace fs = std::filesystem;

namespace {

struct Options {
  // shared
  std::string run, config, data, model = "all";
  std::optional<std::uint64_t> seed;
  std::optional<int> folds, epochs, batch_size;
  std::optional<double> lr;
  // gen
  std::string out;
  int n_per_class = 120, size = kDefaultImageSize;
  double spacing = kDefaultSpacingMm;
  std::uint64_t gen_seed = 0;
  // explain
  std::string case_id, out_dir;
  std::vector<std::string> cases;
  double threshold = kDefaultThresholdFrac;
  // rules / compare
  std::string source = "mask", metric = "accuracy", json_out;
  std::vector<std::string> runs;
  // serve
  std::string host = "127.0.0.1", ui;
  int port = 8080;
};

std::vector<Family> families(const std::string& model) {
  if (model == "all") return {Family::mobile_mini, Family::dense_mini};
  try {
    return {family_from_string(model)};
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

// Existing run config (if any) <- --config file <- flags.
RunConfig run_config(const RunDir& run, const Options& o) {
  RunConfig cfg;
  if (run.exists()) cfg = run.load_config();
  if (!o.config.empty()) {
    Json j;
    try {
      j = read_json_file(o.config);
    } catch (const std::runtime_error& e) {
      throw UsageError(e.what());
    }
    const std::string keep = cfg.dataset;
    cfg = RunConfig::from_json(j);
    if (cfg.dataset.empty()) cfg.dataset = keep;
  }
  if (!o.data.empty()) cfg.dataset = fs::absolute(o.data).lexically_normal().string();
  if (o.seed) cfg.seed = *o.seed;
  if (o.folds) cfg.folds = *o.folds;
  for (Family f : families(o.model)) {
    TrainConfig& t = cfg.train(f);
    if (o.epochs) t.epochs = *o.epochs;
    if (o.batch_size) t.batch_size = *o.batch_size;
    if (o.lr) t.learning_rate = *o.lr;
  }
  try {
    cfg.validate();
  } catch (const UsageError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

void emit(std::ostream& out, const TextReport& r, const std::string& json_out) {
  out << r.text;
  if (!json_out.empty()) write_json_file(json_out, r.json);
}

int serve(const Options& o, std::ostream& out, std::ostream& err) {
  const RunDir run = resolve_run(o.run);
  if (!run.exists()) throw UsageError("no run at " + run.root().string());
  std::optional<fs::path> ui;
  if (!o.ui.empty()) ui = o.ui;
  // Signals are handled on a dedicated thread; block them before httplib spawns workers.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  ReviewService svc(run, ui);
  if (!svc.bind(o.host, o.port)) {
    err << "error: cannot bind " << o.host << ":" << o.port << " (port busy?)\n";
    return 2;
  }
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&set, &sig);
    svc.stop();
  });
  out << "serving " << run.root().string() << " on http://" << o.host << ":" << svc.port() << "/\n" << std::flush;
  svc.serve();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return 0;
}

int dispatch(CLI::App& app, const Options& o, std::ostream& out, std::ostream& err) {
  CLI::App* sub = app.get_subcommands().at(0);
  const std::string cmd = sub->get_name();
  if (cmd == "gen") {
    PhantomParams p;
    p.n_per_class = o.n_per_class;
    p.size = o.size;
    p.spacing_mm = o.spacing;
    p.seed = o.gen_seed;
    generate_dataset(p, o.out);
    out << "wrote " << 3 * o.n_per_class << " phantoms (" << o.size << "x" << o.size << ", " << o.spacing
        << " mm/px, seed " << o.gen_seed << ") to " << o.out << "\n";
    return 0;
  }
  if (cmd == "train" || cmd == "cv") {
    const RunDir run = resolve_run(o.run);
    prepare_run(run, run_config(run, o));
    const auto fams = families(o.model);
    for (Family f : fams) {
      if (cmd == "train") {
        const TrainReport r = train_model(run, f, err);
        out << to_string(f) << ": best epoch " << r.best_epoch << ", best val loss "
            << format_fixed(r.best_val_loss, 4) << ", stopped at " << r.stop_epoch << "\n";
      } else {
        const CVReport r = cv_model(run, f, err);
        out << to_string(f) << ": " << r.folds.size() << "-fold accuracy " << format_fixed(r.mean_accuracy, 3)
            << " ± " << format_fixed(r.sd_accuracy, 3) << ", macro-F1 " << format_fixed(r.mean_macro_f1, 3) << " ± "
            << format_fixed(r.sd_macro_f1, 3) << "\n";
      }
    }
    if (cmd == "cv" && fs::exists(run.cv_report(Family::mobile_mini)) && fs::exists(run.cv_report(Family::dense_mini))) {
      const Json e = ensemble_cv(run);
      out << "ensemble: fold accuracy " << format_fixed(e.at("mean_accuracy").get<double>(), 3) << " ± "
          << format_fixed(e.at("sd_accuracy").get<double>(), 3) << "\n";
    }
    return 0;
  }
  if (cmd == "eval") {
    emit(out, evaluate_run(resolve_run(o.run), err), o.json_out);
    return 0;
  }
  if (cmd == "explain") {
    check_threshold(o.threshold);
    const RunDir run = resolve_run(o.run);
    if (!o.cases.empty()) {
      const auto bundles = build_case_bundles(run, o.cases);
      for (const auto& b : bundles) out << "wrote cases/" << b.id << ".json\n";
      return 0;
    }
    if (o.case_id.empty()) throw UsageError("explain needs --case ID or --cases ID,...");
    out << explain_case(run, o.case_id, o.threshold, o.out_dir).dump(2) << "\n";
    return 0;
  }
  if (cmd == "rules") {
    emit(out, rules_run(resolve_run(o.run), o.source), o.json_out);
    return 0;
  }
  if (cmd == "compare") {
    emit(out, compare_runs(o.runs, o.metric), o.json_out);
    return 0;
  }
  if (cmd == "serve") return serve(o, out, err);
  if (cmd == "report") {
    const RunDir run = resolve_run(o.run);
    if (!run.exists()) throw UsageError("no run at " + run.root().string());
    const LikertReport r = aggregate_likert(LikertStore(run.scores()).load());
    out << r.to_text();
    if (!o.json_out.empty()) write_json_file(o.json_out, r.to_json());
    return 0;
  }
  throw UsageError("unknown command " + cmd);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"neuroscope: explainable ensemble classification of phantom MRI slices"};
  app.name("neuroscope");
  app.require_subcommand(1, 1);

  auto run_opt = [&](CLI::App* s) { s->add_option("--run", o.run, "Run name under the runs root, or a path")->required(); };
  auto train_opts = [&](CLI::App* s) {
    run_opt(s);
    s->add_option("--data", o.data, "Dataset directory written by gen");
    s->add_option("--config", o.config, "JSON run configuration");
    s->add_option("--model", o.model, "mobile_mini, dense_mini or all")
        ->check(CLI::IsMember({"mobile_mini", "dense_mini", "all"}));
    s->add_option("--seed", o.seed, "Master seed");
    s->add_option("--epochs", o.epochs, "Maximum epochs")->check(CLI::PositiveNumber);
    s->add_option("--batch-size", o.batch_size, "Mini-batch size")->check(CLI::PositiveNumber);
    s->add_option("--lr", o.lr, "Initial learning rate")->check(CLI::PositiveNumber);
  };

  CLI::App* gen = app.add_subcommand("gen", "Generate a phantom dataset");
  gen->add_option("--out", o.out, "Output directory")->required();
  gen->add_option("--n-per-class", o.n_per_class, "Images per class")->check(CLI::PositiveNumber);
  gen->add_option("--size", o.size, "Image side in pixels");
  gen->add_option("--spacing", o.spacing, "Pixel spacing in mm")->check(CLI::PositiveNumber);
  gen->add_option("--seed", o.gen_seed, "Generator seed");

  CLI::App* train = app.add_subcommand("train", "Train on the 70% split with a validation hold-out");
  train_opts(train);
  CLI::App* cv = app.add_subcommand("cv", "Stratified k-fold cross-validation on the 70% split");
  train_opts(cv);
  cv->add_option("--folds", o.folds, "Number of folds")->check(CLI::Range(2, 100));

  CLI::App* eval = app.add_subcommand("eval", "Evaluate members and ensembles on the held-out 30%");
  run_opt(eval);
  eval->add_option("--json", o.json_out, "Also write the report JSON here");

  CLI::App* explain = app.add_subcommand("explain", "Grad-CAM++ saliency and overlap for a case");
  run_opt(explain);
  explain->add_option("--case", o.case_id, "Case id");
  explain->add_option("--cases", o.cases, "Build case bundles for these ids")->delimiter(',');
  explain->add_option("--threshold", o.threshold, "Top fraction of pixels kept, in (0, 1]");
  explain->add_option("--out", o.out_dir, "Write heatmap and overlay here");

  CLI::App* rules = app.add_subcommand("rules", "Clinical rule overlay over the test set");
  run_opt(rules);
  rules->add_option("--source", o.source, "Region source: mask or saliency")
      ->check(CLI::IsMember({"mask", "saliency"}));
  rules->add_option("--json", o.json_out, "Also write the report JSON here");

  CLI::App* compare = app.add_subcommand("compare", "Paired statistics over fold scores");
  compare->add_option("--runs", o.runs, "Score sets, first is the reference")->delimiter(',')->required();
  compare->add_option("--metric", o.metric, "accuracy, macro_f1 or val_loss")
      ->check(CLI::IsMember({"accuracy", "macro_f1", "val_loss"}));
  compare->add_option("--json", o.json_out, "Also write the report JSON here");

  CLI::App* serve_cmd = app.add_subcommand("serve", "Case-review HTTP service");
  run_opt(serve_cmd);
  serve_cmd->add_option("--host", o.host, "Bind address");
  serve_cmd->add_option("--port", o.port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));
  serve_cmd->add_option("--ui", o.ui, "Static UI directory served under /");

  CLI::App* report = app.add_subcommand("report", "Aggregate Likert scores");
  run_opt(report);
  report->add_option("--json", o.json_out, "Also write the report JSON here");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::Success&) {
    CLI::App* s = app.get_subcommands().empty() ? &app : app.get_subcommands().at(0);
    out << s->help();
    return 0;
  } catch (const CLI::ParseError& e) {
    CLI::App* s = app.get_subcommands().empty() ? &app : app.get_subcommands().at(0);
    err << "error: " << e.what() << "\n\n" << s->help();
    return 1;
  }

  try {
    return dispatch(app, o, out, err);
  } catch (const std::invalid_argument& e) {  // UsageError, DatasetError, config validation
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace neuroscope
