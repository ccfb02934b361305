#include "neuroscope/service/run.hpp"

#include <cstdlib>

namespace neuroscope {

std::filesystem::path runs_root() {
  if (const char* env = std::getenv("NEUROSCOPE_RUNS_DIR"); env && *env) return env;
  return "runs";
}

TrainConfig desk_train_config(Family family) {
  TrainConfig c = TrainConfig::defaults(family);
  c.batch_size = 8;
  return c;
}

void RunConfig::validate() const {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw UsageError("test_fraction must be in (0, 1), got " + std::to_string(test_fraction));
  if (folds < 2) throw UsageError("folds must be at least 2, got " + std::to_string(folds));
  if (bundle_count < 0) throw UsageError("bundle_count must be non-negative");
  mobile.validate();
  dense.validate();
}

Json RunConfig::to_json() const {
  return Json{{"seed", seed},
              {"dataset", dataset},
              {"test_fraction", test_fraction},
              {"folds", folds},
              {"bundle_count", bundle_count},
              {"mobile_mini", mobile.to_json()},
              {"dense_mini", dense.to_json()},
              {"rules", rules.to_json()}};
}

RunConfig RunConfig::from_json(const Json& j) {
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  RunConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.dataset = j.value("dataset", c.dataset);
    c.test_fraction = j.value("test_fraction", c.test_fraction);
    c.folds = j.value("folds", c.folds);
    c.bundle_count = j.value("bundle_count", c.bundle_count);
    if (j.contains("rules")) c.rules = RuleConfig::from_json(j.at("rules"));
    for (Family f : {Family::mobile_mini, Family::dense_mini}) {
      Json t = desk_train_config(f).to_json();
      if (j.contains("train")) t.merge_patch(j.at("train"));
      if (j.contains(to_string(f))) t.merge_patch(j.at(to_string(f)));
      c.train(f) = TrainConfig::from_json(t, f);
    }
  } catch (const Json::exception& e) {
    throw UsageError(std::string("invalid config: ") + e.what());
  }
  return c;
}

RunConfig RunDir::load_config() const {
  if (!exists()) throw std::runtime_error("no run at " + root_.string() + " (missing run.json)");
  return RunConfig::from_json(read_json_file(config()));
}

RunDir resolve_run(const std::string& name) {
  if (name.empty()) throw UsageError("run name must not be empty");
  if (name.find('/') != std::string::npos || std::filesystem::exists(name)) return RunDir(name);
  return RunDir(runs_root() / name);
}

}  // namespace neuroscope
