#include "neuroscope/tensor/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "neuroscope/common/rng.hpp"

namespace neuroscope::ops {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

void record(Tape* tape, const char* op, std::vector<Tensor> inputs, const Tensor& out,
            Tape::BackwardFn fn) {
  if (!tape) return;
  std::erase_if(inputs, [](const Tensor& t) { return !t.defined(); });
  tape->record(op, std::move(inputs), out, std::move(fn));
}

void require_rank(const Tensor& t, std::size_t rank, const char* op, const char* what) {
  if (!t.defined() || t.rank() != rank) {
    throw ShapeError(std::string(op) + ": " + what + " must have rank " + std::to_string(rank) +
                     (t.defined() ? ", got " + shape_str(t.shape()) : ", got undefined"));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

struct ConvGeometry {
  std::size_t n, c, h, w;
  std::size_t kh, kw;
  std::size_t stride, pad;
  std::size_t oh, ow;
};

ConvGeometry conv_geometry(const char* op, const Tensor& input, std::size_t kh, std::size_t kw,
                           int stride, int padding) {
  if (stride < 1) throw HyperparameterError(std::string(op) + ": stride must be >= 1");
  if (padding < 0) throw HyperparameterError(std::string(op) + ": padding must be >= 0");
  ConvGeometry g{input.dim(0), input.dim(1), input.dim(2), input.dim(3), kh, kw,
                 static_cast<std::size_t>(stride), static_cast<std::size_t>(padding), 0, 0};
  if (kh == 0 || kw == 0 || kh > g.h + 2 * g.pad || kw > g.w + 2 * g.pad) {
    throw ShapeError(std::string(op) + ": kernel " + std::to_string(kh) + "x" +
                     std::to_string(kw) + " larger than padded input " + shape_str(input.shape()));
  }
  g.oh = (g.h + 2 * g.pad - kh) / g.stride + 1;
  g.ow = (g.w + 2 * g.pad - kw) / g.stride + 1;
  return g;
}

// col is [C*kh*kw, oh*ow]
void im2col(const double* x, const ConvGeometry& g, double* col) {
  const std::size_t plane = g.oh * g.ow;
  for (std::size_t c = 0; c < g.c; ++c) {
    const double* xc = x + c * g.h * g.w;
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        double* row = col + ((c * g.kh + ki) * g.kw + kj) * plane;
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ki) - static_cast<long>(g.pad);
          double* dst = row + oy * g.ow;
          if (iy < 0 || iy >= static_cast<long>(g.h)) {
            std::fill(dst, dst + g.ow, 0.0);
            continue;
          }
          const double* src = xc + static_cast<std::size_t>(iy) * g.w;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kj) - static_cast<long>(g.pad);
            dst[ox] = (ix < 0 || ix >= static_cast<long>(g.w)) ? 0.0 : src[ix];
          }
        }
      }
    }
  }
}

void col2im_add(const double* col, const ConvGeometry& g, double* dx) {
  const std::size_t plane = g.oh * g.ow;
  for (std::size_t c = 0; c < g.c; ++c) {
    double* dxc = dx + c * g.h * g.w;
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        const double* row = col + ((c * g.kh + ki) * g.kw + kj) * plane;
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ki) - static_cast<long>(g.pad);
          if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
          double* dst = dxc + static_cast<std::size_t>(iy) * g.w;
          const double* src = row + oy * g.ow;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kj) - static_cast<long>(g.pad);
            if (ix >= 0 && ix < static_cast<long>(g.w)) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(Tape* tape, const Tensor& input, const Tensor& kernel, const Tensor& bias,
              int stride, int padding) {
  require_rank(input, 4, "conv2d", "input");
  require_rank(kernel, 4, "conv2d", "kernel");
  const std::size_t f = kernel.dim(0);
  if (kernel.dim(1) != input.dim(1)) {
    throw ShapeError("conv2d: kernel expects " + std::to_string(kernel.dim(1)) +
                     " input channels, input has " + std::to_string(input.dim(1)));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != f)) {
    throw ShapeError("conv2d: bias must have shape [" + std::to_string(f) + "]");
  }
  const ConvGeometry g = conv_geometry("conv2d", input, kernel.dim(2), kernel.dim(3), stride, padding);
  const std::size_t k = g.c * g.kh * g.kw;
  const std::size_t plane = g.oh * g.ow;
  const bool direct = g.kh == 1 && g.kw == 1 && g.stride == 1 && g.pad == 0;

  Tensor out(Shape{g.n, f, g.oh, g.ow});
  Buffer col(direct ? 0 : k * plane);
  const ConstMatMap wmat(kernel.data().data(), f, k);
  for (std::size_t n = 0; n < g.n; ++n) {
    const double* x = input.data().data() + n * g.c * g.h * g.w;
    const double* colp = x;
    if (!direct) {
      im2col(x, g, col.data());
      colp = col.data();
    }
    MatMap y(out.data().data() + n * f * plane, f, plane);
    y.noalias() = wmat * ConstMatMap(colp, k, plane);
    if (bias.defined()) y.colwise() += ConstVecMap(bias.data().data(), f);
  }

  record(tape, "conv2d", {input, kernel, bias}, out,
         [input, kernel, bias, out, g, f, k, plane, direct]() mutable {
           const double* gy_all = out.grad().data();
           const ConstMatMap wmat(kernel.data().data(), f, k);
           Buffer col(direct ? 0 : k * plane);
           Buffer dcol(direct ? 0 : k * plane);
           const bool need_w = kernel.wants_grad();
           const bool need_b = bias.defined() && bias.wants_grad();
           const bool need_x = input.wants_grad();
           for (std::size_t n = 0; n < g.n; ++n) {
             const ConstMatMap gy(gy_all + n * f * plane, f, plane);
             const double* x = input.data().data() + n * g.c * g.h * g.w;
             if (need_w) {
               const double* colp = x;
               if (!direct) {
                 im2col(x, g, col.data());
                 colp = col.data();
               }
               MatMap dw(kernel.grad_storage().data(), f, k);
               dw.noalias() += gy * ConstMatMap(colp, k, plane).transpose();
             }
             if (need_b) {
               VecMap db(bias.grad_storage().data(), f);
               db += gy.rowwise().sum();
             }
             if (need_x) {
               double* dx = input.grad_storage().data() + n * g.c * g.h * g.w;
               if (direct) {
                 MatMap(dx, k, plane).noalias() += wmat.transpose() * gy;
               } else {
                 MatMap(dcol.data(), k, plane).noalias() = wmat.transpose() * gy;
                 col2im_add(dcol.data(), g, dx);
               }
             }
           }
         });
  return out;
}

Tensor depthwise_conv2d(Tape* tape, const Tensor& input, const Tensor& kernel,
                        const Tensor& bias, int stride, int padding) {
  require_rank(input, 4, "depthwise_conv2d", "input");
  require_rank(kernel, 3, "depthwise_conv2d", "kernel");
  if (kernel.dim(0) != input.dim(1)) {
    throw ShapeError("depthwise_conv2d: kernel has " + std::to_string(kernel.dim(0)) +
                     " channels, input has " + std::to_string(input.dim(1)));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != input.dim(1))) {
    throw ShapeError("depthwise_conv2d: bias must have one entry per channel");
  }
  const ConvGeometry g =
      conv_geometry("depthwise_conv2d", input, kernel.dim(1), kernel.dim(2), stride, padding);
  Tensor out(Shape{g.n, g.c, g.oh, g.ow});

  auto x = input.data();
  auto w = kernel.data();
  auto y = out.data();
  for (std::size_t n = 0; n < g.n; ++n) {
    for (std::size_t c = 0; c < g.c; ++c) {
      const double* xc = x.data() + (n * g.c + c) * g.h * g.w;
      const double* wc = w.data() + c * g.kh * g.kw;
      double* yc = y.data() + (n * g.c + c) * g.oh * g.ow;
      const double b = bias.defined() ? bias.data()[c] : 0.0;
      for (std::size_t oy = 0; oy < g.oh; ++oy) {
        for (std::size_t ox = 0; ox < g.ow; ++ox) {
          double acc = b;
          for (std::size_t ki = 0; ki < g.kh; ++ki) {
            const long iy = static_cast<long>(oy * g.stride + ki) - static_cast<long>(g.pad);
            if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
            for (std::size_t kj = 0; kj < g.kw; ++kj) {
              const long ix = static_cast<long>(ox * g.stride + kj) - static_cast<long>(g.pad);
              if (ix < 0 || ix >= static_cast<long>(g.w)) continue;
              acc += wc[ki * g.kw + kj] * xc[iy * static_cast<long>(g.w) + ix];
            }
          }
          yc[oy * g.ow + ox] = acc;
        }
      }
    }
  }

  record(tape, "depthwise_conv2d", {input, kernel, bias}, out,
         [input, kernel, bias, out, g]() mutable {
           const double* gy = out.grad().data();
           const double* x = input.data().data();
           const double* w = kernel.data().data();
           double* dx = input.wants_grad() ? input.grad_storage().data() : nullptr;
           double* dw = kernel.wants_grad() ? kernel.grad_storage().data() : nullptr;
           double* db = (bias.defined() && bias.wants_grad()) ? bias.grad_storage().data() : nullptr;
           for (std::size_t n = 0; n < g.n; ++n) {
             for (std::size_t c = 0; c < g.c; ++c) {
               const std::size_t in_off = (n * g.c + c) * g.h * g.w;
               const double* gyc = gy + (n * g.c + c) * g.oh * g.ow;
               const double* wc = w + c * g.kh * g.kw;
               for (std::size_t oy = 0; oy < g.oh; ++oy) {
                 for (std::size_t ox = 0; ox < g.ow; ++ox) {
                   const double go = gyc[oy * g.ow + ox];
                   if (db) db[c] += go;
                   for (std::size_t ki = 0; ki < g.kh; ++ki) {
                     const long iy = static_cast<long>(oy * g.stride + ki) - static_cast<long>(g.pad);
                     if (iy < 0 || iy >= static_cast<long>(g.h)) continue;
                     for (std::size_t kj = 0; kj < g.kw; ++kj) {
                       const long ix = static_cast<long>(ox * g.stride + kj) - static_cast<long>(g.pad);
                       if (ix < 0 || ix >= static_cast<long>(g.w)) continue;
                       const std::size_t xi = in_off + static_cast<std::size_t>(iy) * g.w +
                                              static_cast<std::size_t>(ix);
                       if (dw) dw[c * g.kh * g.kw + ki * g.kw + kj] += go * x[xi];
                       if (dx) dx[xi] += go * wc[ki * g.kw + kj];
                     }
                   }
                 }
               }
             }
           }
         });
  return out;
}

Tensor dense(Tape* tape, const Tensor& input, const Tensor& weight, const Tensor& bias) {
  require_rank(input, 2, "dense", "input");
  require_rank(weight, 2, "dense", "weight");
  const std::size_t n = input.dim(0), d = input.dim(1), k = weight.dim(0);
  if (weight.dim(1) != d) {
    throw ShapeError("dense: weight " + shape_str(weight.shape()) + " incompatible with input " +
                     shape_str(input.shape()));
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != k)) {
    throw ShapeError("dense: bias must have shape [" + std::to_string(k) + "]");
  }
  Tensor out(Shape{n, k});
  MatMap y(out.data().data(), n, k);
  y.noalias() = ConstMatMap(input.data().data(), n, d) *
                ConstMatMap(weight.data().data(), k, d).transpose();
  if (bias.defined()) y.rowwise() += ConstVecMap(bias.data().data(), k).transpose();

  record(tape, "dense", {input, weight, bias}, out,
         [input, weight, bias, out, n, d, k]() mutable {
           const ConstMatMap gy(out.grad().data(), n, k);
           if (input.wants_grad()) {
             MatMap(input.grad_storage().data(), n, d).noalias() +=
                 gy * ConstMatMap(weight.data().data(), k, d);
           }
           if (weight.wants_grad()) {
             MatMap(weight.grad_storage().data(), k, d).noalias() +=
                 gy.transpose() * ConstMatMap(input.data().data(), n, d);
           }
           if (bias.defined() && bias.wants_grad()) {
             VecMap(bias.grad_storage().data(), k) += gy.colwise().sum().transpose();
           }
         });
  return out;
}

namespace {

template <typename Fwd, typename Deriv>
Tensor pointwise(Tape* tape, const char* name, const Tensor& x, Fwd fwd, Deriv deriv) {
  Tensor out(x.shape());
  auto xs = x.data();
  auto ys = out.data();
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = fwd(xs[i]);
  record(tape, name, {x}, out, [x, out, deriv]() mutable {
    if (!x.wants_grad()) return;
    auto gy = out.grad();
    auto xs = x.data();
    auto gx = x.grad_storage();
    for (std::size_t i = 0; i < xs.size(); ++i) gx[i] += gy[i] * deriv(xs[i]);
  });
  return out;
}

}  // namespace

Tensor relu(Tape* tape, const Tensor& x) {
  return pointwise(
      tape, "relu", x, [](double v) { return v > 0.0 ? v : 0.0; },
      [](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor relu6(Tape* tape, const Tensor& x) {
  return pointwise(
      tape, "relu6", x, [](double v) { return std::min(std::max(v, 0.0), 6.0); },
      [](double v) { return (v > 0.0 && v < 6.0) ? 1.0 : 0.0; });
}

Tensor global_avg_pool(Tape* tape, const Tensor& input) {
  require_rank(input, 4, "global_avg_pool", "input");
  const std::size_t n = input.dim(0), c = input.dim(1), hw = input.dim(2) * input.dim(3);
  Tensor out(Shape{n, c});
  const double inv = 1.0 / static_cast<double>(hw);
  for (std::size_t i = 0; i < n * c; ++i) {
    const double* p = input.data().data() + i * hw;
    double acc = 0.0;
    for (std::size_t j = 0; j < hw; ++j) acc += p[j];
    out.data()[i] = acc * inv;
  }
  record(tape, "global_avg_pool", {input}, out, [input, out, n, c, hw, inv]() mutable {
    if (!input.wants_grad()) return;
    auto gx = input.grad_storage();
    auto gy = out.grad();
    for (std::size_t i = 0; i < n * c; ++i) {
      const double gi = gy[i] * inv;
      for (std::size_t j = 0; j < hw; ++j) gx[i * hw + j] += gi;
    }
  });
  return out;
}

Tensor avg_pool2(Tape* tape, const Tensor& input) {
  require_rank(input, 4, "avg_pool2", "input");
  const std::size_t n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
  if (h < 2 || w < 2) throw ShapeError("avg_pool2: input smaller than 2x2");
  const std::size_t oh = h / 2, ow = w / 2;
  Tensor out(Shape{n, c, oh, ow});
  for (std::size_t p = 0; p < n * c; ++p) {
    const double* x = input.data().data() + p * h * w;
    double* y = out.data().data() + p * oh * ow;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const double* r0 = x + (2 * oy) * w + 2 * ox;
        const double* r1 = r0 + w;
        y[oy * ow + ox] = 0.25 * (r0[0] + r0[1] + r1[0] + r1[1]);
      }
    }
  }
  record(tape, "avg_pool2", {input}, out, [input, out, n, c, h, w, oh, ow]() mutable {
    if (!input.wants_grad()) return;
    auto gx = input.grad_storage();
    auto gy = out.grad();
    for (std::size_t p = 0; p < n * c; ++p) {
      double* dx = gx.data() + p * h * w;
      const double* g = gy.data() + p * oh * ow;
      for (std::size_t oy = 0; oy < oh; ++oy) {
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const double q = 0.25 * g[oy * ow + ox];
          double* r0 = dx + (2 * oy) * w + 2 * ox;
          r0[0] += q;
          r0[1] += q;
          r0[w] += q;
          r0[w + 1] += q;
        }
      }
    }
  });
  return out;
}

Tensor concat_channels(Tape* tape, const Tensor& a, const Tensor& b) {
  require_rank(a, 4, "concat_channels", "a");
  require_rank(b, 4, "concat_channels", "b");
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
    throw ShapeError("concat_channels: incompatible shapes " + shape_str(a.shape()) + " and " +
                     shape_str(b.shape()));
  }
  const std::size_t n = a.dim(0), ca = a.dim(1), cb = b.dim(1), hw = a.dim(2) * a.dim(3);
  Tensor out(Shape{n, ca + cb, a.dim(2), a.dim(3)});
  for (std::size_t i = 0; i < n; ++i) {
    const double* pa = a.data().data() + i * ca * hw;
    const double* pb = b.data().data() + i * cb * hw;
    double* po = out.data().data() + i * (ca + cb) * hw;
    std::copy(pa, pa + ca * hw, po);
    std::copy(pb, pb + cb * hw, po + ca * hw);
  }
  record(tape, "concat_channels", {a, b}, out, [a, b, out, n, ca, cb, hw]() mutable {
    auto gy = out.grad();
    for (std::size_t i = 0; i < n; ++i) {
      const double* go = gy.data() + i * (ca + cb) * hw;
      if (a.wants_grad()) {
        double* ga = a.grad_storage().data() + i * ca * hw;
        for (std::size_t j = 0; j < ca * hw; ++j) ga[j] += go[j];
      }
      if (b.wants_grad()) {
        double* gb = b.grad_storage().data() + i * cb * hw;
        for (std::size_t j = 0; j < cb * hw; ++j) gb[j] += go[ca * hw + j];
      }
    }
  });
  return out;
}

Tensor dropout(Tape* tape, const Tensor& x, double rate, bool training, DropoutKey key) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw HyperparameterError("dropout: rate must be in [0,1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate);
  Buffer mask(x.numel());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = counter_uniform(key.seed, key.step, key.layer, i) < rate ? 0.0 : keep_scale;
  }
  Tensor out(x.shape());
  for (std::size_t i = 0; i < mask.size(); ++i) out.data()[i] = x.data()[i] * mask[i];
  record(tape, "dropout", {x}, out, [x, out, mask = std::move(mask)]() mutable {
    if (!x.wants_grad()) return;
    auto gx = x.grad_storage();
    auto gy = out.grad();
    for (std::size_t i = 0; i < mask.size(); ++i) gx[i] += gy[i] * mask[i];
  });
  return out;
}

Tensor softmax(Tape* tape, const Tensor& logits) {
  require_rank(logits, 2, "softmax", "logits");
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  Tensor out(logits.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const double* z = logits.data().data() + i * k;
    double* p = out.data().data() + i * k;
    const double zmax = *std::max_element(z, z + k);
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      p[j] = std::exp(z[j] - zmax);
      total += p[j];
    }
    for (std::size_t j = 0; j < k; ++j) p[j] /= total;
  }
  record(tape, "softmax", {logits}, out, [logits, out, n, k]() mutable {
    if (!logits.wants_grad()) return;
    auto gz = logits.grad_storage();
    auto gy = out.grad();
    auto y = out.data();
    for (std::size_t i = 0; i < n; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < k; ++j) dot += gy[i * k + j] * y[i * k + j];
      for (std::size_t j = 0; j < k; ++j) gz[i * k + j] += y[i * k + j] * (gy[i * k + j] - dot);
    }
  });
  return out;
}

Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] + b.data()[i];
  record(tape, "add", {a, b}, out, [a, b, out]() mutable {
    auto gy = out.grad();
    if (a.wants_grad()) {
      auto ga = a.grad_storage();
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i];
    }
    if (b.wants_grad()) {
      auto gb = b.grad_storage();
      for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i];
    }
  });
  return out;
}

Tensor mul(Tape* tape, const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
  record(tape, "mul", {a, b}, out, [a, b, out]() mutable {
    auto gy = out.grad();
    if (a.wants_grad()) {
      auto ga = a.grad_storage();
      for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * b.data()[i];
    }
    if (b.wants_grad()) {
      auto gb = b.grad_storage();
      for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * a.data()[i];
    }
  });
  return out;
}

Tensor scale(Tape* tape, const Tensor& x, double factor) {
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) out.data()[i] = x.data()[i] * factor;
  record(tape, "scale", {x}, out, [x, out, factor]() mutable {
    if (!x.wants_grad()) return;
    auto gx = x.grad_storage();
    auto gy = out.grad();
    for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i] * factor;
  });
  return out;
}

Tensor sum(Tape* tape, const Tensor& x) {
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  Tensor out = Tensor::scalar(acc);
  record(tape, "sum", {x}, out, [x, out]() mutable {
    if (!x.wants_grad()) return;
    const double g = out.grad()[0];
    for (double& v : x.grad_storage()) v += g;
  });
  return out;
}

Tensor mean(Tape* tape, const Tensor& x) {
  const double inv = 1.0 / static_cast<double>(x.numel());
  double acc = 0.0;
  for (double v : x.data()) acc += v;
  Tensor out = Tensor::scalar(acc * inv);
  record(tape, "mean", {x}, out, [x, out, inv]() mutable {
    if (!x.wants_grad()) return;
    const double g = out.grad()[0] * inv;
    for (double& v : x.grad_storage()) v += g;
  });
  return out;
}

Tensor select(Tape* tape, const Tensor& x, std::size_t flat_index) {
  if (flat_index >= x.numel()) {
    throw ShapeError("select: index " + std::to_string(flat_index) + " out of range for " +
                     shape_str(x.shape()));
  }
  Tensor out = Tensor::scalar(x.data()[flat_index]);
  record(tape, "select", {x}, out, [x, out, flat_index]() mutable {
    if (!x.wants_grad()) return;
    x.grad_storage()[flat_index] += out.grad()[0];
  });
  return out;
}

}  // namespace neuroscope::ops
