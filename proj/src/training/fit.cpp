#include "neuroscope/training/fit.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "neuroscope/common/rng.hpp"
#include "neuroscope/networks/loss.hpp"

namespace neuroscope {

TrainConfig TrainConfig::defaults(Family family) {
  TrainConfig c;
  c.learning_rate = family == Family::mobile_mini ? 0.0005 : 0.0003;
  return c;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (early_stop_patience < 1) throw std::invalid_argument("early_stop_patience must be >= 1");
  if (plateau_patience < 1) throw std::invalid_argument("plateau_patience must be >= 1");
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) throw std::invalid_argument("plateau_factor must be in (0, 1)");
  if (!(min_lr >= 0.0)) throw std::invalid_argument("min_lr must be >= 0");
  if (freeze_epochs < 0 || freeze_epochs > epochs) throw std::invalid_argument("freeze_epochs must be in [0, epochs]");
  augmentation.validate();
}

Json TrainConfig::to_json() const {
  return Json{{"learning_rate", learning_rate},
              {"batch_size", batch_size},
              {"epochs", epochs},
              {"early_stop_patience", early_stop_patience},
              {"plateau_factor", plateau_factor},
              {"plateau_patience", plateau_patience},
              {"min_lr", min_lr},
              {"adam", Json{{"beta1", adam.beta1}, {"beta2", adam.beta2}, {"eps", adam.eps}}},
              {"seed", seed},
              {"freeze_epochs", freeze_epochs},
              {"augment", augment},
              {"augmentation", augmentation.to_json()},
              {"class_weights", class_weights}};
}

TrainConfig TrainConfig::from_json(const Json& j, Family family) {
  TrainConfig c = defaults(family);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.early_stop_patience = j.value("early_stop_patience", c.early_stop_patience);
  c.plateau_factor = j.value("plateau_factor", c.plateau_factor);
  c.plateau_patience = j.value("plateau_patience", c.plateau_patience);
  c.min_lr = j.value("min_lr", c.min_lr);
  if (j.contains("adam")) {
    const Json& a = j["adam"];
    c.adam.beta1 = a.value("beta1", c.adam.beta1);
    c.adam.beta2 = a.value("beta2", c.adam.beta2);
    c.adam.eps = a.value("eps", c.adam.eps);
  }
  c.seed = j.value("seed", c.seed);
  c.freeze_epochs = j.value("freeze_epochs", c.freeze_epochs);
  c.augment = j.value("augment", c.augment);
  if (j.contains("augmentation")) c.augmentation = AugmentConfig::from_json(j["augmentation"]);
  c.class_weights = j.value("class_weights", c.class_weights);
  c.validate();
  return c;
}

Json TrainReport::to_json() const {
  Json ep = Json::array();
  for (const auto& e : epochs) {
    ep.push_back(Json{{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"train_accuracy", e.train_accuracy},
                      {"val_loss", e.val_loss},
                      {"val_accuracy", e.val_accuracy},
                      {"lr", e.lr},
                      {"frozen", e.frozen}});
  }
  Json j{{"epochs", ep},
         {"best_epoch", best_epoch},
         {"best_val_loss", best_val_loss},
         {"stop_epoch", stop_epoch},
         {"early_stopped", early_stopped},
         {"status", status},
         {"checkpoint", checkpoint},
         {"lr_trace", lr_trace}};
  if (!error.empty()) j["error"] = error;
  return j;
}

TrainReport TrainReport::from_json(const Json& j) {
  TrainReport r;
  for (const auto& e : j.at("epochs")) {
    EpochRecord rec;
    rec.epoch = e.at("epoch").get<int>();
    rec.train_loss = e.at("train_loss").get<double>();
    rec.train_accuracy = e.at("train_accuracy").get<double>();
    rec.val_loss = e.at("val_loss").get<double>();
    rec.val_accuracy = e.at("val_accuracy").get<double>();
    rec.lr = e.at("lr").get<double>();
    rec.frozen = e.at("frozen").get<bool>();
    r.epochs.push_back(rec);
  }
  r.best_epoch = j.at("best_epoch").get<int>();
  r.best_val_loss = j.at("best_val_loss").get<double>();
  r.stop_epoch = j.at("stop_epoch").get<int>();
  r.early_stopped = j.at("early_stopped").get<bool>();
  r.status = j.at("status").get<std::string>();
  r.checkpoint = j.value("checkpoint", std::string{});
  r.lr_trace = j.at("lr_trace").get<std::vector<double>>();
  r.error = j.value("error", std::string{});
  return r;
}

Tensor batch_tensor(const std::vector<const Sample*>& samples) {
  if (samples.empty()) throw std::invalid_argument("batch_tensor: empty batch");
  const int w = samples[0]->image.width, h = samples[0]->image.height;
  Tensor t(Shape{samples.size(), 1, static_cast<std::size_t>(h), static_cast<std::size_t>(w)});
  auto d = t.data();
  std::size_t off = 0;
  for (const Sample* s : samples) {
    if (s->image.width != w || s->image.height != h) throw ShapeError("batch_tensor: mixed image sizes");
    std::copy(s->image.pixels.begin(), s->image.pixels.end(), d.begin() + static_cast<long>(off));
    off += s->image.pixels.size();
  }
  return t;
}

EvalResult evaluate(const Model& model, const std::vector<Sample>& samples, int batch_size) {
  if (samples.empty()) throw std::invalid_argument("evaluate: no samples");
  EvalResult r;
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < samples.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(samples.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<const Sample*> batch;
    for (std::size_t i = start; i < end; ++i) batch.push_back(&samples[i]);
    const ForwardResult fr = model.forward(nullptr, batch_tensor(batch));
    for (std::size_t i = 0; i < batch.size(); ++i) {
      ProbVector p;
      for (int c = 0; c < kNumClasses; ++c) p.p[c] = fr.probs.data()[i * kNumClasses + c];
      loss += -std::log(p.p[batch[i]->label] + kLogEpsilon);
      if (p.argmax() == batch[i]->label) ++correct;
      r.probs.push_back(p);
    }
  }
  r.loss = loss / double(samples.size());
  r.accuracy = double(correct) / double(samples.size());
  return r;
}

std::vector<ProbVector> predict(const Model& model, const std::vector<Sample>& samples, int batch_size) {
  return evaluate(model, samples, batch_size).probs;
}

std::vector<Sample> augmented_pool(const std::vector<Sample>& train, const AugmentConfig& cfg,
                                   std::uint64_t seed) {
  std::vector<Sample> pool = train;
  pool.reserve(2 * train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    Rng rng(derive_seed(seed, i));
    Sample s = augment(train[i], cfg, rng);
    s.id += "#aug";
    pool.push_back(std::move(s));
  }
  return pool;
}

namespace {

std::vector<std::vector<double>> snapshot(const Model& m) {
  std::vector<std::vector<double>> out;
  for (const auto& p : m.parameters()) out.emplace_back(p.tensor.data().begin(), p.tensor.data().end());
  return out;
}

void restore(Model& m, const std::vector<std::vector<double>>& snap) {
  auto params = m.parameters();
  for (std::size_t i = 0; i < params.size(); ++i)
    std::copy(snap[i].begin(), snap[i].end(), params[i].tensor.data().begin());
}

}  // namespace

TrainReport fit(Model& model, const std::vector<Sample>& train, const std::vector<Sample>& val,
                const TrainConfig& cfg, const std::filesystem::path& out_dir, const FitCallback& on_epoch) {
  cfg.validate();
  if (train.empty() || val.empty()) throw std::invalid_argument("fit: train and validation sets must be non-empty");
  for (const auto* set : {&train, &val})
    for (const auto& s : *set)
      if (s.image.width != model.spec().input_size || s.image.height != model.spec().input_size)
        throw ShapeError("fit: sample " + s.id + " does not match model input size " +
                         std::to_string(model.spec().input_size));

  std::array<std::size_t, kNumClasses> counts{};
  for (const auto& s : train) ++counts.at(static_cast<std::size_t>(s.label));
  ClassWeights weights;
  if (cfg.class_weights) {
    bool all_present = counts[0] && counts[1] && counts[2];
    if (all_present) weights = compute_class_weights(counts);
  }

  const std::vector<Sample> pool =
      cfg.augment ? augmented_pool(train, cfg.augmentation, derive_seed(cfg.seed, 0xA0A0)) : train;

  // trainable mask per parameter, mirroring the group layout
  std::vector<std::size_t> group_of;
  for (std::size_t g = 0; g < model.groups().size(); ++g)
    for (std::size_t k = 0; k < model.groups()[g].params.size(); ++k) group_of.push_back(g);
  Adam opt(model.parameters(), cfg.adam);

  TrainingMonitor monitor(MonitorConfig{cfg.early_stop_patience, cfg.plateau_patience, cfg.plateau_factor, cfg.min_lr},
                          cfg.learning_rate);
  TrainReport report;
  std::vector<std::vector<double>> best = snapshot(model);
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::uint64_t step = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const bool frozen = epoch <= cfg.freeze_epochs;
    model.set_frozen(frozen);
    std::vector<bool> trainable(group_of.size());
    for (std::size_t i = 0; i < group_of.size(); ++i) trainable[i] = model.group_trainable(group_of[i]);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = monitor.lr();
    rec.frozen = frozen;
    report.lr_trace.push_back(monitor.lr());

    Rng shuffler(derive_seed(cfg.seed, 0xE0000u + static_cast<std::uint64_t>(epoch)));
    shuffler.shuffle(order);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    try {
      for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
        std::vector<const Sample*> batch;
        std::vector<int> labels;
        for (std::size_t i = start; i < end; ++i) {
          batch.push_back(&pool[order[i]]);
          labels.push_back(pool[order[i]].label);
        }
        Tape tape;
        model.zero_grad();
        const ForwardResult fr = model.forward(&tape, batch_tensor(batch), ForwardOptions{true, step++});
        const Tensor loss = weighted_cross_entropy(&tape, fr.probs, one_hot(labels), weights);
        const double lv = loss.item();
        if (!std::isfinite(lv)) throw NumericalError("training loss is not finite");
        tape.backward(loss);
        opt.step(monitor.lr(), trainable);
        loss_sum += lv * double(batch.size());
        const auto pv = fr.prob_vectors();
        for (std::size_t i = 0; i < pv.size(); ++i)
          if (pv[i].argmax() == labels[i]) ++correct;
      }
      rec.train_loss = loss_sum / double(pool.size());
      rec.train_accuracy = double(correct) / double(pool.size());
      const EvalResult ev = evaluate(model, val, cfg.batch_size);
      rec.val_loss = ev.loss;
      rec.val_accuracy = ev.accuracy;
      const EpochDecision d = monitor.observe(ev.loss);
      report.epochs.push_back(rec);
      report.stop_epoch = epoch;
      if (d.improved) best = snapshot(model);
      if (on_epoch) on_epoch(FitProgress{rec, d});
      if (d.stop) {
        report.early_stopped = true;
        break;
      }
    } catch (const NumericalError& e) {
      report.status = "diverged";
      report.error = e.what();
      report.stop_epoch = epoch;
      break;
    }
  }

  model.set_frozen(false);
  restore(model, best);
  report.best_epoch = monitor.best_epoch();
  report.best_val_loss = monitor.best_epoch() > 0 ? monitor.best_loss() : std::nan("");
  if (!out_dir.empty() && monitor.best_epoch() > 0) {
    model.save(out_dir / "checkpoint");
    report.checkpoint = "checkpoint";
  }
  return report;
}

}  // namespace neuroscope
