#pragma once

namespace neuroscope {

struct MonitorConfig {
  int early_stop_patience = 5;
  int plateau_patience = 2;
  double plateau_factor = 0.1;
  double min_lr = 1e-6;
};

struct EpochDecision {
  bool improved = false;    // strictly below the best loss so far
  bool lr_reduced = false;  // lr() changed after this epoch
  bool stop = false;        // early stopping triggered
};

// Validation-loss monitor combining early stopping and plateau LR reduction.
// A reduction resets the plateau counter but not the early-stop counter.
class TrainingMonitor {
 public:
  TrainingMonitor(MonitorConfig cfg, double initial_lr);

  // Epochs are numbered from 1 in call order. Throws NumericalError on NaN.
  EpochDecision observe(double val_loss);

  double lr() const { return lr_; }
  int best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_; }
  int epochs_seen() const { return epoch_; }

 private:
  MonitorConfig cfg_;
  double lr_;
  double best_;
  int best_epoch_ = 0;
  int epoch_ = 0;
  int since_best_ = 0;
  int plateau_wait_ = 0;
};

}  // namespace neuroscope
