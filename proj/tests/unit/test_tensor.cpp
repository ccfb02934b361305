#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "neuroscope/tensor/checkpoint.hpp"
#include "neuroscope/tensor/ops.hpp"
#include "neuroscope/tensor/tape.hpp"
#include "oracles.hpp"

using namespace neuroscope;
using namespace neuroscope::testing;

namespace {

// Runs `op` on leaves, backprops the probe, and FD-checks every leaf.
double check_op(Rng& rng, std::vector<Tensor> leaves, const std::function<Tensor(Tape*, const std::vector<Tensor>&)>& op) {
  for (auto& l : leaves) l.set_requires_grad(true);
  Tensor y0 = op(nullptr, leaves);
  Tensor w = random_tensor(rng, y0.shape());
  Tape tape;
  tape.backward(probe(&tape, op(&tape, leaves), w));
  auto f = [&] { return probe(nullptr, op(nullptr, leaves), w).item(); };
  double worst = 0;
  for (const auto& l : leaves) worst = std::max(worst, max_grad_error(l, f));
  return worst;
}

}  // namespace

TEST(Conv2d, IdentityKernelReproducesInput) {
  Rng rng(1);
  Tensor x = random_tensor(rng, {1, 1, 3, 3});
  Tensor y = ops::conv2d(nullptr, x, Tensor({1, 1, 1, 1}, 1.0), Tensor({1}, 0.0));
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(y.data()[i], x.data()[i]);
}

TEST(Conv2d, HandComputedDiagonalKernel) {
  Tensor x({1, 1, 2, 2}, {1, 2, 3, 4});
  Tensor k({1, 1, 2, 2}, {1, 0, 0, 1});
  Tensor y = ops::conv2d(nullptr, x, k, Tensor({1}, 0.0));
  ASSERT_EQ(y.shape(), (Shape{1, 1, 1, 1}));
  EXPECT_EQ(y.item(), 5.0);
}

TEST(Conv2d, OutputShapeAndErrors) {
  Tensor x({2, 3, 9, 7});
  Tensor y = ops::conv2d(nullptr, x, Tensor({4, 3, 3, 3}), Tensor({4}), 2, 1);
  EXPECT_EQ(y.shape(), (Shape{2, 4, 5, 4}));
  EXPECT_THROW(ops::conv2d(nullptr, x, Tensor({4, 2, 3, 3}), Tensor({4})), ShapeError);
  EXPECT_THROW(ops::conv2d(nullptr, x, Tensor({4, 3, 3, 3}), Tensor({4}), 0), HyperparameterError);
}

TEST(Conv2d, GradientMatchesFiniteDifferences) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const int stride = 1 + trial % 2, pad = trial % 3 == 0 ? 0 : 1;
    double err = check_op(rng, {random_tensor(rng, {2, 2, 6, 5}), random_tensor(rng, {3, 2, 3, 3}), random_tensor(rng, {3})},
                          [&](Tape* t, const std::vector<Tensor>& v) { return ops::conv2d(t, v[0], v[1], v[2], stride, pad); });
    EXPECT_LT(err, 1e-6) << "trial " << trial;
  }
}

TEST(DepthwiseConv2d, IdentityAndZeroKernels) {
  Rng rng(2);
  Tensor x = random_tensor(rng, {1, 2, 4, 4});
  Tensor k({2, 3, 3}, 0.0);
  k.data()[9 + 4] = 1.0;  // channel 1: centre tap
  Tensor y = ops::depthwise_conv2d(nullptr, x, k, Tensor(), 1, 1);
  for (std::size_t i = 0; i < 16; ++i) {
    EXPECT_EQ(y.data()[i], 0.0);
    EXPECT_EQ(y.data()[16 + i], x.data()[16 + i]);
  }
  k.data()[4] = 1.0;
  Tensor z = ops::depthwise_conv2d(nullptr, x, k, Tensor(), 1, 1);
  for (std::size_t i = 0; i < 32; ++i) EXPECT_EQ(z.data()[i], x.data()[i]);
}

TEST(DepthwiseConv2d, GradientMatchesFiniteDifferences) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const int stride = 1 + trial % 2, k = trial % 2 ? 3 : 5;
    double err = check_op(rng, {random_tensor(rng, {2, 3, 7, 6}), random_tensor(rng, {3, std::size_t(k), std::size_t(k)}), random_tensor(rng, {3})},
                          [&](Tape* t, const std::vector<Tensor>& v) { return ops::depthwise_conv2d(t, v[0], v[1], v[2], stride, k / 2); });
    EXPECT_LT(err, 1e-6) << "trial " << trial;
  }
}

TEST(Activations, Relu6Definition) {
  Tensor y = ops::relu6(nullptr, Tensor({3}, {-1, 3, 9}));
  EXPECT_EQ(std::vector<double>(y.data().begin(), y.data().end()), (std::vector<double>{0, 3, 6}));
  Tensor r = ops::relu(nullptr, Tensor({3}, {-1, 3, 9}));
  EXPECT_EQ(std::vector<double>(r.data().begin(), r.data().end()), (std::vector<double>{0, 3, 9}));
}

TEST(Activations, GradientsMatchFiniteDifferences) {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    EXPECT_LT(check_op(rng, {kink_free_tensor(rng, {2, 3, 4})}, [](Tape* t, const std::vector<Tensor>& v) { return ops::relu(t, v[0]); }), 1e-6);
    EXPECT_LT(check_op(rng, {kink_free_tensor(rng, {2, 3, 4})}, [](Tape* t, const std::vector<Tensor>& v) { return ops::relu6(t, v[0]); }), 1e-6);
  }
}

TEST(Pooling, GlobalAveragePoolMean) {
  Tensor y = ops::global_avg_pool(nullptr, Tensor({1, 1, 2, 2}, {2, 4, 6, 8}));
  ASSERT_EQ(y.shape(), (Shape{1, 1}));
  EXPECT_EQ(y.item(), 5.0);
}

TEST(Pooling, AvgPool2DropsOddEdge) {
  Tensor x({1, 1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  Tensor y = ops::avg_pool2(nullptr, x);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 1, 1}));
  EXPECT_EQ(y.item(), 3.0);
}

TEST(Pooling, GradientsMatchFiniteDifferences) {
  Rng rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    EXPECT_LT(check_op(rng, {random_tensor(rng, {2, 3, 4, 5})}, [](Tape* t, const std::vector<Tensor>& v) { return ops::global_avg_pool(t, v[0]); }), 1e-6);
    EXPECT_LT(check_op(rng, {random_tensor(rng, {2, 2, 5, 6})}, [](Tape* t, const std::vector<Tensor>& v) { return ops::avg_pool2(t, v[0]); }), 1e-6);
  }
}

TEST(Dense, ValueAndGradient) {
  Tensor y = ops::dense(nullptr, Tensor({1, 2}, {1, 2}), Tensor({2, 2}, {1, 0, 3, 4}), Tensor({2}, {0.5, -1}));
  EXPECT_EQ(y.data()[0], 1.5);
  EXPECT_EQ(y.data()[1], 10.0);
  Rng rng(15);
  for (int trial = 0; trial < 20; ++trial)
    EXPECT_LT(check_op(rng, {random_tensor(rng, {3, 5}), random_tensor(rng, {4, 5}), random_tensor(rng, {4})},
                       [](Tape* t, const std::vector<Tensor>& v) { return ops::dense(t, v[0], v[1], v[2]); }),
              1e-6);
}

TEST(ConcatChannels, ValuesAndGradient) {
  Tensor a({1, 1, 1, 2}, {1, 2}), b({1, 2, 1, 2}, {3, 4, 5, 6});
  Tensor c = ops::concat_channels(nullptr, a, b);
  ASSERT_EQ(c.shape(), (Shape{1, 3, 1, 2}));
  EXPECT_EQ(std::vector<double>(c.data().begin(), c.data().end()), (std::vector<double>{1, 2, 3, 4, 5, 6}));
  Rng rng(16);
  for (int trial = 0; trial < 20; ++trial)
    EXPECT_LT(check_op(rng, {random_tensor(rng, {2, 2, 3, 3}), random_tensor(rng, {2, 3, 3, 3})},
                       [](Tape* t, const std::vector<Tensor>& v) { return ops::concat_channels(t, v[0], v[1]); }),
              1e-6);
}

TEST(Dropout, InferenceIsIdentityAndTrainingScales) {
  Rng rng(3);
  Tensor x = random_tensor(rng, {4, 1000}, 1.0, 2.0);
  Tensor id = ops::dropout(nullptr, x, 0.3, false, {});
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(id.data()[i], x.data()[i]);
  Tensor y = ops::dropout(nullptr, x, 0.3, true, {7, 1, 0});
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < x.numel(); ++i) {
    if (y.data()[i] == 0.0) ++zeros;
    else EXPECT_NEAR(y.data()[i], x.data()[i] / 0.7, 1e-12);
  }
  EXPECT_NEAR(double(zeros) / x.numel(), 0.3, 0.03);
  Tensor again = ops::dropout(nullptr, x, 0.3, true, {7, 1, 0});
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_EQ(again.data()[i], y.data()[i]);
  EXPECT_THROW(ops::dropout(nullptr, x, 1.0, true, {}), HyperparameterError);
}

TEST(Dropout, GradientMatchesFiniteDifferences) {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial)
    EXPECT_LT(check_op(rng, {random_tensor(rng, {2, 8})},
                       [&](Tape* t, const std::vector<Tensor>& v) { return ops::dropout(t, v[0], 0.4, true, {std::uint64_t(trial), 3, 1}); }),
              1e-6);
}

TEST(Softmax, ClosedForms) {
  Tensor a = ops::softmax(nullptr, Tensor({1, 3}, {0, 0, 0}));
  Tensor b = ops::softmax(nullptr, Tensor({1, 3}, {1000, 1000, 1000}));
  Tensor c = ops::softmax(nullptr, Tensor({1, 3}, {std::log(1.0), std::log(2.0), std::log(3.0)}));
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(a.data()[i], 1.0 / 3, 1e-15);
    EXPECT_NEAR(b.data()[i], 1.0 / 3, 1e-15);
    EXPECT_NEAR(c.data()[i], (i + 1) / 6.0, 1e-15);
  }
}

TEST(Softmax, RowsSumToOneAndShiftInvariant) {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor x = random_tensor(rng, {4, 3}, -30, 30);
    Tensor shifted = x.clone();
    for (double& v : shifted.data()) v += 17.25;
    Tensor p = ops::softmax(nullptr, x), q = ops::softmax(nullptr, shifted);
    for (int r = 0; r < 4; ++r) {
      double s = 0;
      for (int c = 0; c < 3; ++c) {
        s += p.data()[r * 3 + c];
        EXPECT_NEAR(p.data()[r * 3 + c], q.data()[r * 3 + c], 1e-12);
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(Softmax, GradientMatchesFiniteDifferences) {
  Rng rng(18);
  for (int trial = 0; trial < 20; ++trial)
    EXPECT_LT(check_op(rng, {random_tensor(rng, {3, 3}, -3, 3)}, [](Tape* t, const std::vector<Tensor>& v) { return ops::softmax(t, v[0]); }), 1e-6);
}

TEST(Elementwise, GradientsMatchFiniteDifferences) {
  Rng rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    EXPECT_LT(check_op(rng, {random_tensor(rng, {2, 3}), random_tensor(rng, {2, 3})}, [](Tape* t, const std::vector<Tensor>& v) { return ops::add(t, v[0], v[1]); }), 1e-6);
    EXPECT_LT(check_op(rng, {random_tensor(rng, {2, 3}), random_tensor(rng, {2, 3})}, [](Tape* t, const std::vector<Tensor>& v) { return ops::mul(t, v[0], v[1]); }), 1e-6);
    EXPECT_LT(check_op(rng, {random_tensor(rng, {2, 3})}, [](Tape* t, const std::vector<Tensor>& v) { return ops::scale(t, v[0], -2.5); }), 1e-6);
    EXPECT_LT(check_op(rng, {random_tensor(rng, {2, 3})}, [](Tape* t, const std::vector<Tensor>& v) { return ops::mean(t, v[0]); }), 1e-6);
    EXPECT_LT(check_op(rng, {random_tensor(rng, {2, 3})}, [](Tape* t, const std::vector<Tensor>& v) { return ops::select(t, v[0], 4); }), 1e-6);
  }
}

TEST(Backward, SumGivesOnesAndQuadraticGivesX) {
  Rng rng(5);
  Tensor x = random_tensor(rng, {2, 3, 4});
  x.set_requires_grad(true);
  Tape tape;
  tape.backward(ops::sum(&tape, x));
  for (double g : x.grad()) EXPECT_EQ(g, 1.0);
  x.zero_grad();
  Tape t2;
  t2.backward(ops::scale(&t2, ops::sum(&t2, ops::mul(&t2, x, x)), 0.5));
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_NEAR(x.grad()[i], x.data()[i], 1e-15);
}

TEST(Backward, AccumulatesAcrossCallsAndRejectsNonScalar) {
  Tensor x({3}, {1, 2, 3});
  x.set_requires_grad(true);
  for (int i = 0; i < 2; ++i) {
    Tape tape;
    tape.backward(ops::sum(&tape, x));
  }
  for (double g : x.grad()) EXPECT_EQ(g, 2.0);
  Tape tape;
  Tensor y = ops::scale(&tape, x, 2.0);
  EXPECT_THROW(tape.backward(y), ShapeError);
}

TEST(Backward, Linearity) {
  Rng rng(6);
  Tensor x = random_tensor(rng, {2, 4});
  x.set_requires_grad(true);
  auto f = [&](Tape* t) { return ops::sum(t, ops::mul(t, x, x)); };
  auto g = [&](Tape* t) { return ops::sum(t, ops::softmax(t, x)); };
  Tape t1;
  t1.backward(f(&t1));
  const std::vector<double> gf(x.grad().begin(), x.grad().end());
  x.zero_grad();
  Tape t2;
  t2.backward(g(&t2));
  const std::vector<double> gg(x.grad().begin(), x.grad().end());
  x.zero_grad();
  Tape t3;
  t3.backward(ops::add(&t3, ops::scale(&t3, f(&t3), 1.5), ops::scale(&t3, g(&t3), -0.25)));
  for (std::size_t i = 0; i < x.numel(); ++i) EXPECT_NEAR(x.grad()[i], 1.5 * gf[i] - 0.25 * gg[i], 1e-12);
}

TEST(GradWrtActivation, MeanAndIndependentLogit) {
  Rng rng(7);
  Tensor x = random_tensor(rng, {1, 2, 3, 3});
  Tape tape;
  Tensor a = ops::relu(&tape, x);
  Tensor m = ops::mean(&tape, a);
  Tensor g = tape.grad_wrt_activation(m, a);
  ASSERT_EQ(g.shape(), a.shape());
  for (double v : g.data()) EXPECT_NEAR(v, 1.0 / 18, 1e-15);
  Tensor other = ops::sum(&tape, ops::scale(&tape, random_tensor(rng, {3}), 2.0));
  Tensor z = tape.grad_wrt_activation(other, a);
  for (double v : z.data()) EXPECT_EQ(v, 0.0);
  Tensor stranger({2});
  EXPECT_ANY_THROW(tape.grad_wrt_activation(m, stranger));
}

TEST(GradWrtActivation, DoesNotDisturbLeafGradients) {
  Rng rng(8);
  Tensor w = random_tensor(rng, {1, 1, 3, 3});
  w.set_requires_grad(true);
  Tensor x = random_tensor(rng, {1, 1, 5, 5});
  Tape tape;
  Tensor a = ops::conv2d(&tape, x, w, Tensor({1}, 0.0));
  Tensor s = ops::sum(&tape, ops::mul(&tape, a, a));
  tape.grad_wrt_activation(s, a);
  EXPECT_FALSE(w.has_grad() && std::any_of(w.grad().begin(), w.grad().end(), [](double v) { return v != 0; }));
}

TEST(Determinism, IdenticalInputsGiveIdenticalOutputs) {
  Rng r1(9), r2(9);
  Tensor x1 = random_tensor(r1, {2, 2, 6, 6}), k1 = random_tensor(r1, {3, 2, 3, 3});
  Tensor x2 = random_tensor(r2, {2, 2, 6, 6}), k2 = random_tensor(r2, {3, 2, 3, 3});
  Tensor y1 = ops::conv2d(nullptr, x1, k1, Tensor({3}, 0.1), 1, 1), y2 = ops::conv2d(nullptr, x2, k2, Tensor({3}, 0.1), 1, 1);
  for (std::size_t i = 0; i < y1.numel(); ++i) EXPECT_EQ(y1.data()[i], y2.data()[i]);
}

TEST(Checkpoint, BitExactRoundTrip) {
  Rng rng(10);
  std::vector<NamedTensor> params{{"a", random_tensor(rng, {2, 3})}, {"b", random_tensor(rng, {4}, -1e300, 1e300)}};
  params[0].tensor.data()[0] = 0.1 + 0.2;
  const auto dir = std::filesystem::temp_directory_path() / "ns_ckpt_test";
  std::filesystem::create_directories(dir);
  save_checkpoint(dir / "w.json", params);
  const auto loaded = load_checkpoint(dir / "w.json");
  ASSERT_EQ(loaded.size(), 2u);
  for (std::size_t p = 0; p < 2; ++p) {
    EXPECT_EQ(loaded[p].name, params[p].name);
    EXPECT_EQ(loaded[p].tensor.shape(), params[p].tensor.shape());
    for (std::size_t i = 0; i < params[p].tensor.numel(); ++i)
      EXPECT_EQ(std::bit_cast<std::uint64_t>(loaded[p].tensor.data()[i]), std::bit_cast<std::uint64_t>(params[p].tensor.data()[i]));
  }
  std::filesystem::remove_all(dir);
}
