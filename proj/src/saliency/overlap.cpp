#include "neuroscope/saliency/overlap.hpp"

#include <stdexcept>

namespace neuroscope {

OverlapScores overlap(const RoiMask& g, const RoiMask& m) {
  if (g.width != m.width || g.height != m.height) throw std::invalid_argument("overlap: mask dimensions differ");
  std::size_t inter = 0, ng = 0, nm = 0;
  for (std::size_t i = 0; i < g.bits.size(); ++i) {
    ng += g.bits[i];
    nm += m.bits[i];
    inter += g.bits[i] & m.bits[i];
  }
  OverlapScores s;
  if (ng + nm == 0) {
    s.dice = s.iou = 1.0;
    s.both_empty = true;
    return s;
  }
  s.dice = 2.0 * double(inter) / double(ng + nm);
  s.iou = double(inter) / double(ng + nm - inter);
  return s;
}

Json OverlapScores::to_json() const { return Json{{"dice", dice}, {"iou", iou}, {"both_empty", both_empty}}; }

}  // namespace neuroscope
