#include "neuroscope/saliency/gradcam.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace neuroscope {

std::vector<double> gradcam_pp_weights(const std::vector<double>& A, const std::vector<double>& g, std::size_t k,
                                       std::size_t h, std::size_t w) {
  const std::size_t plane = h * w;
  if (A.size() != k * plane || g.size() != k * plane)
    throw std::invalid_argument("gradcam_pp: activation/gradient size mismatch");
  std::vector<double> weights(k, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    const double* a = A.data() + c * plane;
    const double* gr = g.data() + c * plane;
    const double sum_a = std::accumulate(a, a + plane, 0.0);
    double wk = 0.0;
    for (std::size_t i = 0; i < plane; ++i) {
      const double g1 = gr[i], g2 = g1 * g1, g3 = g2 * g1;
      const double den = 2.0 * g2 + sum_a * g3;
      const double alpha = std::abs(den) < kAlphaEpsilon ? 0.0 : g2 / den;
      wk += alpha * std::max(g1, 0.0);
    }
    weights[c] = wk;
  }
  return weights;
}

std::vector<double> gradcam_pp_raw(const std::vector<double>& A, const std::vector<double>& g, std::size_t k,
                                   std::size_t h, std::size_t w) {
  const std::vector<double> weights = gradcam_pp_weights(A, g, k, h, w);
  const std::size_t plane = h * w;
  std::vector<double> map(plane, 0.0);
  for (std::size_t c = 0; c < k; ++c) {
    if (weights[c] == 0.0) continue;
    const double* a = A.data() + c * plane;
    for (std::size_t i = 0; i < plane; ++i) map[i] += weights[c] * a[i];
  }
  for (auto& v : map) v = std::max(v, 0.0);
  return map;
}

namespace {
void normalize_inplace(std::vector<double>& v) {
  if (v.empty()) return;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double l = *lo, range = *hi - *lo;
  if (!(range > 0.0)) {
    std::fill(v.begin(), v.end(), 0.0);
    return;
  }
  for (auto& x : v) x = (x - l) / range;
}
}  // namespace

std::vector<double> upsample_normalize(const std::vector<double>& raw, int raw_w, int raw_h, int width, int height) {
  std::vector<double> up = resample_bilinear(raw, raw_w, raw_h, width, height);
  normalize_inplace(up);
  return up;
}

SaliencyMap gradcam_pp(const Model& model, const ImageGray& image, int class_index, double threshold_frac) {
  if (class_index < 0 || class_index >= kNumClasses)
    throw std::invalid_argument("class index " + std::to_string(class_index) + " outside {0,1,2}");
  const int s = model.spec().input_size;
  if (image.width != s || image.height != s)
    throw std::invalid_argument("image is " + std::to_string(image.width) + "x" + std::to_string(image.height) +
                                " but the model expects " + std::to_string(s) + "x" + std::to_string(s));
  if (!model.parameters_finite()) throw std::invalid_argument("model parameters are not finite");

  Tensor x(Shape{1, 1, static_cast<std::size_t>(s), static_cast<std::size_t>(s)}, image.pixels);
  Tape tape;
  const ForwardResult fr = model.forward(&tape, x, ForwardOptions{false, 0});
  const Tensor& A = fr.activations.at("cam_target");
  const Tensor score = ops::select(&tape, fr.logits, static_cast<std::size_t>(class_index));
  const Tensor g = tape.grad_wrt_activation(score, A);

  const std::size_t k = A.dim(1), h = A.dim(2), w = A.dim(3);
  const std::vector<double> a(A.data().begin(), A.data().end()), gv(g.data().begin(), g.data().end());
  const std::vector<double> raw = gradcam_pp_raw(a, gv, k, h, w);

  SaliencyMap m;
  m.width = image.width;
  m.height = image.height;
  m.values = upsample_normalize(raw, static_cast<int>(w), static_cast<int>(h), m.width, m.height);
  m.source_class = class_index;
  m.threshold_frac = threshold_frac;
  m.binary = threshold_top_fraction(m.values, m.width, m.height, threshold_frac);
  return m;
}

SaliencyMap combine_maps(const std::vector<SaliencyMap>& maps, double threshold_frac) {
  if (maps.empty()) throw std::invalid_argument("combine_maps: no maps");
  SaliencyMap out = maps[0];
  for (std::size_t i = 1; i < maps.size(); ++i) {
    if (maps[i].width != out.width || maps[i].height != out.height)
      throw std::invalid_argument("combine_maps: dimension mismatch");
    for (std::size_t p = 0; p < out.values.size(); ++p) out.values[p] += maps[i].values[p];
  }
  for (auto& v : out.values) v /= double(maps.size());
  normalize_inplace(out.values);
  out.layer = "cam_target(mean)";
  out.threshold_frac = threshold_frac;
  out.binary = threshold_top_fraction(out.values, out.width, out.height, threshold_frac);
  return out;
}

RoiMask threshold_top_fraction(const std::vector<double>& values, int width, int height, double frac) {
  if (!(frac > 0.0 && frac <= 1.0)) throw std::invalid_argument("threshold fraction must be in (0, 1]");
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (values.size() != n) throw std::invalid_argument("threshold: value count does not match dimensions");
  const auto keep = std::min(n, static_cast<std::size_t>(std::ceil(frac * double(n) - 1e-9)));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  RoiMask m(width, height);
  for (std::size_t i = 0; i < keep; ++i) m.bits[idx[i]] = 1;
  return m;
}

}  // namespace neuroscope
