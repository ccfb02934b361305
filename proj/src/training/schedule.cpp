#include "neuroscope/training/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "neuroscope/training/adam.hpp"

namespace neuroscope {

TrainingMonitor::TrainingMonitor(MonitorConfig cfg, double initial_lr)
    : cfg_(cfg), lr_(initial_lr), best_(std::numeric_limits<double>::infinity()) {
  if (cfg.early_stop_patience < 1 || cfg.plateau_patience < 1)
    throw std::invalid_argument("patience values must be >= 1");
  if (!(cfg.plateau_factor > 0.0 && cfg.plateau_factor < 1.0))
    throw std::invalid_argument("plateau_factor must be in (0, 1)");
}

EpochDecision TrainingMonitor::observe(double val_loss) {
  if (!std::isfinite(val_loss)) throw NumericalError("validation loss is not finite");
  ++epoch_;
  EpochDecision d;
  if (val_loss < best_) {
    best_ = val_loss;
    best_epoch_ = epoch_;
    since_best_ = 0;
    plateau_wait_ = 0;
    d.improved = true;
    return d;
  }
  ++since_best_;
  ++plateau_wait_;
  if (plateau_wait_ >= cfg_.plateau_patience) {
    const double next = std::max(lr_ * cfg_.plateau_factor, cfg_.min_lr);
    if (next < lr_) {
      lr_ = next;
      d.lr_reduced = true;
    }
    plateau_wait_ = 0;
  }
  d.stop = since_best_ >= cfg_.early_stop_patience;
  return d;
}

}  // namespace neuroscope
