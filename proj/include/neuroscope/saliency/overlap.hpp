#pragma once

#include "neuroscope/common/json_util.hpp"
#include "neuroscope/data/image.hpp"

namespace neuroscope {

struct OverlapScores {
  double dice = 0;
  double iou = 0;
  bool both_empty = false;  // dice = iou = 1 by convention

  Json to_json() const;
};

// Dice = 2|G n M| / (|G| + |M|), IoU = |G n M| / |G u M|. Throws
// std::invalid_argument on a dimension mismatch.
OverlapScores overlap(const RoiMask& g, const RoiMask& m);

}  // namespace neuroscope
