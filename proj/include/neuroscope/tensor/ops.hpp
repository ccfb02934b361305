#pragma once

#include <cstdint>

#include "neuroscope/tensor/tape.hpp"
#include "neuroscope/tensor/tensor.hpp"

// Differentiable operators. Every function takes the tape to record on as its
// first argument; pass nullptr to run forward only.
namespace neuroscope::ops {

// input [N,C,H,W], kernel [F,C,kh,kw], bias [F] -> [N,F,H',W']
Tensor conv2d(Tape* tape, const Tensor& input, const Tensor& kernel, const Tensor& bias,
              int stride = 1, int padding = 0);

// input [N,C,H,W], kernel [C,kh,kw], bias [C] (may be undefined) -> [N,C,H',W']
Tensor depthwise_conv2d(Tape* tape, const Tensor& input, const Tensor& kernel,
                        const Tensor& bias, int stride = 1, int padding = 0);

// input [N,D], weight [K,D], bias [K] -> [N,K]
Tensor dense(Tape* tape, const Tensor& input, const Tensor& weight, const Tensor& bias);

Tensor relu(Tape* tape, const Tensor& x);
Tensor relu6(Tape* tape, const Tensor& x);

// [N,C,H,W] -> [N,C]
Tensor global_avg_pool(Tape* tape, const Tensor& input);
// 2x2 window, stride 2; odd trailing rows/columns are dropped.
Tensor avg_pool2(Tape* tape, const Tensor& input);
// Concatenates along axis 1 of two [N,*,H,W] tensors.
Tensor concat_channels(Tape* tape, const Tensor& a, const Tensor& b);

struct DropoutKey {
  std::uint64_t seed = 0;
  std::uint64_t step = 0;
  std::uint64_t layer = 0;
};
// Inverted dropout. Identity when training is false.
Tensor dropout(Tape* tape, const Tensor& x, double rate, bool training, DropoutKey key);

// Row-wise softmax over [N,K] with max subtraction.
Tensor softmax(Tape* tape, const Tensor& logits);

Tensor add(Tape* tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape* tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape* tape, const Tensor& x, double factor);
Tensor sum(Tape* tape, const Tensor& x);
Tensor mean(Tape* tape, const Tensor& x);
// Scalar view of element `flat_index`.
Tensor select(Tape* tape, const Tensor& x, std::size_t flat_index);

}  // namespace neuroscope::ops
