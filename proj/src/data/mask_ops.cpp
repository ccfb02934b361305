#include "neuroscope/data/mask_ops.hpp"

#include <utility>

namespace neuroscope {

RoiMask erode8(const RoiMask& m, int iterations) {
  RoiMask cur = m;
  for (int it = 0; it < iterations; ++it) {
    RoiMask next(m.width, m.height);
    for (int y = 0; y < m.height; ++y) {
      for (int x = 0; x < m.width; ++x) {
        if (!cur.at(x, y)) continue;
        bool keep = true;
        for (int dy = -1; dy <= 1 && keep; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (!cur.inside(x + dx, y + dy) || !cur.at(x + dx, y + dy)) {
              keep = false;
              break;
            }
          }
        }
        next.at(x, y) = keep ? 1 : 0;
      }
    }
    cur = std::move(next);
  }
  return cur;
}

Components label_components(const RoiMask& m) {
  Components c;
  c.labels.assign(m.bits.size(), 0);
  std::vector<int> stack;
  int next_label = 0;
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      const int idx = y * m.width + x;
      if (!m.bits[idx] || c.labels[idx]) continue;
      ++next_label;
      std::size_t size = 0;
      stack.push_back(idx);
      c.labels[idx] = next_label;
      while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        ++size;
        const int px = p % m.width, py = p / m.width;
        const int nx[4] = {px - 1, px + 1, px, px};
        const int ny[4] = {py, py, py - 1, py + 1};
        for (int k = 0; k < 4; ++k) {
          if (!m.inside(nx[k], ny[k])) continue;
          const int q = ny[k] * m.width + nx[k];
          if (m.bits[q] && !c.labels[q]) {
            c.labels[q] = next_label;
            stack.push_back(q);
          }
        }
      }
      c.sizes.push_back(size);
    }
  }
  return c;
}

RoiMask largest_component(const RoiMask& m) {
  const Components c = label_components(m);
  RoiMask out(m.width, m.height);
  if (c.sizes.empty()) return out;
  int best = 0;
  for (std::size_t k = 1; k < c.sizes.size(); ++k) {
    if (c.sizes[k] > c.sizes[best]) best = static_cast<int>(k);
  }
  for (std::size_t i = 0; i < c.labels.size(); ++i) out.bits[i] = c.labels[i] == best + 1 ? 1 : 0;
  return out;
}

RoiMask contour(const RoiMask& m) {
  RoiMask out(m.width, m.height);
  for (int y = 0; y < m.height; ++y) {
    for (int x = 0; x < m.width; ++x) {
      if (!m.at(x, y)) continue;
      const int nx[4] = {x - 1, x + 1, x, x};
      const int ny[4] = {y, y, y - 1, y + 1};
      for (int k = 0; k < 4; ++k) {
        if (!m.inside(nx[k], ny[k]) || !m.at(nx[k], ny[k])) {
          out.at(x, y) = 1;
          break;
        }
      }
    }
  }
  return out;
}

}  // namespace neuroscope
